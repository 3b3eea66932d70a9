//! Experiment specs, sweep expansion, parallel execution across runs, and
//! the on-disk CSV/JSON formats.
//!
//! Every job gets its seed from the base seed, its axis values and its run
//! index, so the data files do not depend on scheduling or worker count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{aggregate, SweepPoint};
use crate::egt::StabilityVerdict;
use crate::error::{Error, Result};
use crate::game::{PayoffParams, SocialNorm};
use crate::learning::QTable;
use crate::sim::{run_simulation, EpisodeRecord, Judging, RunOutput, RunSummary, SimConfig};

/// Optional lists of values to sweep. Empty axes keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub b: Vec<f64>,
    pub seed_fraction: Vec<f64>,
    pub alpha: Vec<f64>,
    pub norm: Vec<SocialNorm>,
    pub mode: Vec<Judging>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub base: SimConfig,
    pub sweep: SweepAxes,
    pub runs_per_point: usize,
    pub output: PathBuf,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            base: SimConfig::default(),
            sweep: SweepAxes::default(),
            runs_per_point: 20,
            output: PathBuf::from("out"),
        }
    }
}

/// Axis values of one sweep point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointKey {
    pub b: f64,
    pub seed_fraction: f64,
    pub alpha: f64,
    pub norm: SocialNorm,
    pub mode: Judging,
}

impl PointKey {
    pub fn of(config: &SimConfig) -> Self {
        PointKey {
            b: config.payoff.benefit,
            seed_fraction: config.seed_fraction,
            alpha: config.learner.alpha,
            norm: config.norm,
            mode: config.judging,
        }
    }

    /// File-name stem, e.g. `b5_sf0.2_a0_n9_centralized`.
    pub fn id(&self) -> String {
        format!(
            "b{}_sf{}_a{}_n{}_{}",
            self.b,
            self.seed_fraction,
            self.alpha,
            self.norm.code(),
            mode_name(self.mode)
        )
    }

    fn apply(&self, base: &SimConfig) -> SimConfig {
        let mut config = base.clone();
        config.payoff = PayoffParams {
            benefit: self.b,
            cost: base.payoff.cost,
        };
        config.seed_fraction = self.seed_fraction;
        config.learner.alpha = self.alpha;
        config.norm = self.norm;
        config.judging = self.mode;
        config
    }
}

pub fn mode_name(mode: Judging) -> &'static str {
    match mode {
        Judging::Centralized => "centralized",
        Judging::Decentralized => "decentralized",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Job {
    pub point: PointKey,
    pub run_index: usize,
    pub config: SimConfig,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one job, derived from the base seed, the point's axis values and the run index.
pub fn job_seed(base_seed: u64, point: &PointKey, run_index: usize) -> u64 {
    let words = [
        point.b.to_bits(),
        point.seed_fraction.to_bits(),
        point.alpha.to_bits(),
        point.norm.code() as u64,
        point.mode as u64,
        run_index as u64,
    ];
    words.iter().fold(splitmix64(base_seed), |h, &w| splitmix64(h ^ w))
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.runs_per_point == 0 {
            return Err(Error::invalid("runs_per_point", "must be at least 1"));
        }
        for point in self.points() {
            point.apply(&self.base).validate()?;
        }
        Ok(())
    }

    /// Cartesian product of the sweep axes, in axis order b, seed_fraction, alpha, norm, mode.
    pub fn points(&self) -> Vec<PointKey> {
        let base = PointKey::of(&self.base);
        let or_base = |v: &Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v.clone() };
        let bs = or_base(&self.sweep.b, base.b);
        let sfs = or_base(&self.sweep.seed_fraction, base.seed_fraction);
        let alphas = or_base(&self.sweep.alpha, base.alpha);
        let norms = if self.sweep.norm.is_empty() { vec![base.norm] } else { self.sweep.norm.clone() };
        let modes = if self.sweep.mode.is_empty() { vec![base.mode] } else { self.sweep.mode.clone() };
        let mut out = Vec::new();
        for &b in &bs {
            for &seed_fraction in &sfs {
                for &alpha in &alphas {
                    for &norm in &norms {
                        for &mode in &modes {
                            out.push(PointKey {
                                b,
                                seed_fraction,
                                alpha,
                                norm,
                                mode,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    pub fn jobs(&self) -> Vec<Job> {
        self.points()
            .into_iter()
            .flat_map(|point| {
                (0..self.runs_per_point).map(move |run_index| {
                    let mut config = point.apply(&self.base);
                    config.rng_seed = job_seed(self.base.rng_seed, &point, run_index);
                    Job {
                        point,
                        run_index,
                        config,
                    }
                })
            })
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&text).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Output options that do not change simulated data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
    /// Keep every Nth episode plus the final metric window; 1 keeps everything.
    pub thin: usize,
    pub dump_qtables: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            workers: 0,
            thin: 1,
            dump_qtables: false,
        }
    }
}

/// The episode records kept under `thin`.
pub fn thinned(records: &[EpisodeRecord], thin: usize, window_len: usize) -> impl Iterator<Item = &EpisodeRecord> {
    let thin = thin.max(1);
    let window_start = records.len().saturating_sub(window_len);
    records
        .iter()
        .enumerate()
        .filter(move |(i, _)| i % thin == 0 || *i >= window_start)
        .map(|(_, r)| r)
}

pub fn episode_csv_header(with_norms: bool) -> String {
    let mut h = String::from("episode,mean_reward,coop_level");
    for i in 0..16 {
        write!(h, ",rule_census_{i}").unwrap();
    }
    if with_norms {
        for i in 0..16 {
            write!(h, ",norm_census_{i}").unwrap();
        }
    }
    h
}

pub fn episode_csv<'a>(records: impl IntoIterator<Item = &'a EpisodeRecord>, with_norms: bool) -> String {
    let mut out = episode_csv_header(with_norms);
    out.push('\n');
    for r in records {
        write!(out, "{},{},{}", r.episode, r.mean_reward, r.coop_level).unwrap();
        for c in r.census.rule_counts {
            write!(out, ",{c}").unwrap();
        }
        if with_norms {
            for c in r.census.norm_counts.unwrap_or([0; 16]) {
                write!(out, ",{c}").unwrap();
            }
        }
        out.push('\n');
    }
    out
}

pub const SWEEP_CSV_HEADER: &str = "b,seed_fraction,alpha,norm,mode,run_index,coop_final,dominant_rule,dominant_norm";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn sweep_csv_row(point: &PointKey, run_index: usize, summary: &RunSummary) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        point.b,
        point.seed_fraction,
        point.alpha,
        point.norm.code(),
        mode_name(point.mode),
        run_index,
        opt(summary.coop_final),
        opt(summary.final_census.dominant_rule().map(|r| r.code())),
        opt(summary.final_census.dominant_norm().map(|n| n.code())),
    )
}

pub const STABILITY_CSV_HEADER: &str =
    "norm,resident_rule,g,resident_payoff,worst_mutant,worst_mutant_payoff,stable,strictly_stable,neutral,converged";

pub fn stability_csv(verdicts: &[StabilityVerdict]) -> String {
    let mut out = String::from(STABILITY_CSV_HEADER);
    out.push('\n');
    for v in verdicts {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            v.norm.code(),
            v.resident_rule.code(),
            v.g,
            v.resident_payoff,
            v.worst_mutant.code(),
            v.worst_mutant_payoff,
            v.stable,
            v.strictly_stable,
            v.neutral,
            v.converged
        )
        .unwrap();
    }
    out
}

/// Writes via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Per-point summary file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub point: PointKey,
    pub id: String,
    pub config: SimConfig,
    pub stats: SweepPoint,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run_index: usize,
    pub rng_seed: u64,
    pub coop_final: Option<f64>,
    pub learner_coop_final: Option<f64>,
    pub dominant_rule: Option<u8>,
    pub dominant_norm: Option<u8>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub points: Vec<PointReport>,
    pub files: Vec<PathBuf>,
}

/// Writes the files of a single run: `episodes.csv`, `summary.json` and
/// optionally `qtables.json`, under `dir` with the given stem prefix.
pub fn write_run(dir: &Path, stem: &str, output: &RunOutput, options: &RunOptions) -> Result<Vec<PathBuf>> {
    let with_norms = output.summary.config.judging == Judging::Decentralized;
    let mut files = Vec::new();
    let csv_path = dir.join(format!("{stem}episodes.csv"));
    let kept = thinned(&output.records, options.thin, output.summary.window_len);
    write_atomic(&csv_path, episode_csv(kept, with_norms).as_bytes())?;
    files.push(csv_path);
    if options.dump_qtables {
        let q_path = dir.join(format!("{stem}qtables.json"));
        write_atomic(&q_path, serde_json::to_string_pretty(&output.final_tables)?.as_bytes())?;
        files.push(q_path);
    }
    Ok(files)
}

/// Runs one configuration with its own seed and writes `episodes.csv`,
/// `summary.json` (and `qtables.json` when asked) into `dir`.
pub fn run_single(config: &SimConfig, dir: &Path, options: &RunOptions) -> Result<(RunOutput, Vec<PathBuf>)> {
    let output = run_simulation(config)?;
    let mut files = write_run(dir, "", &output, options)?;
    let path = dir.join("summary.json");
    write_atomic(&path, serde_json::to_string_pretty(&output.summary)?.as_bytes())?;
    files.push(path);
    Ok((output, files))
}

/// Runs every job of `spec` and writes per-run episode CSVs, per-point summary
/// JSON and `sweep.csv` under `spec.output`.
pub fn run_experiment(spec: &ExperimentSpec, options: &RunOptions) -> Result<ExperimentReport> {
    spec.validate()?;
    let out = &spec.output;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let jobs = spec.jobs();

    let execute = |job: &Job| -> Result<(RunSummary, Vec<PathBuf>)> {
        let output = run_simulation(&job.config)?;
        let stem = format!("{}_run{}_", job.point.id(), job.run_index);
        let files = write_run(&out.join("runs"), &stem, &output, options)?;
        Ok((output.summary, files))
    };
    let results: Vec<Result<(RunSummary, Vec<PathBuf>)>> = if options.workers == 0 {
        jobs.par_iter().map(execute).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| Error::invalid("workers", e.to_string()))?;
        pool.install(|| jobs.par_iter().map(execute).collect())
    };

    let mut files = Vec::new();
    let mut by_point: BTreeMap<usize, (PointKey, Vec<(usize, RunSummary)>)> = BTreeMap::new();
    let mut sweep = String::from(SWEEP_CSV_HEADER);
    sweep.push('\n');
    let point_order: Vec<PointKey> = spec.points();
    for (job, result) in jobs.iter().zip(results) {
        let (summary, run_files) = result?;
        files.extend(run_files);
        sweep.push_str(&sweep_csv_row(&job.point, job.run_index, &summary));
        sweep.push('\n');
        let idx = point_order.iter().position(|p| p == &job.point).expect("job point comes from the spec");
        by_point
            .entry(idx)
            .or_insert_with(|| (job.point, Vec::new()))
            .1
            .push((job.run_index, summary));
    }

    let mut points = Vec::new();
    for (_, (point, runs)) in by_point {
        let summaries: Vec<RunSummary> = runs.iter().map(|(_, s)| s.clone()).collect();
        let stats = aggregate(&summaries)?;
        let report = PointReport {
            point,
            id: point.id(),
            config: summaries[0].config.without_seed(),
            stats,
            runs: runs
                .iter()
                .map(|(run_index, s)| RunRecord {
                    run_index: *run_index,
                    rng_seed: s.config.rng_seed,
                    coop_final: s.coop_final,
                    learner_coop_final: s.learner_coop_final,
                    dominant_rule: s.final_census.dominant_rule().map(|r| r.code()),
                    dominant_norm: s.final_census.dominant_norm().map(|n| n.code()),
                })
                .collect(),
        };
        let path = out.join("points").join(format!("{}.json", report.id));
        write_atomic(&path, serde_json::to_string_pretty(&report)?.as_bytes())?;
        files.push(path);
        points.push(report);
    }
    let sweep_path = out.join("sweep.csv");
    write_atomic(&sweep_path, sweep.as_bytes())?;
    files.push(sweep_path);
    Ok(ExperimentReport { points, files })
}

/// Reads a Q-table dump written with `dump_qtables`.
pub fn load_qtables(path: &Path) -> Result<Vec<QTable>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            base: SimConfig {
                episodes: 5,
                encounters_per_episode: 20,
                ..SimConfig::default()
            },
            runs_per_point: 2,
            ..ExperimentSpec::default()
        }
    }

    #[test]
    fn cartesian_point_count() {
        let mut spec = small_spec();
        spec.sweep.norm = vec![SocialNorm::STERN_JUDGING, SocialNorm::ALL_BAD];
        spec.sweep.seed_fraction = vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5];
        assert_eq!(spec.points().len(), 12);
        assert_eq!(spec.jobs().len(), 24);
    }

    #[test]
    fn seeds_depend_on_point_and_run_only() {
        let spec = small_spec();
        let jobs = spec.jobs();
        assert_ne!(jobs[0].config.rng_seed, jobs[1].config.rng_seed);
        let p = jobs[1].point;
        assert_eq!(jobs[1].config.rng_seed, job_seed(spec.base.rng_seed, &p, 1));
        let other = PointKey { alpha: 0.5, ..p };
        assert_ne!(job_seed(0, &p, 1), job_seed(0, &other, 1));
    }

    #[test]
    fn thinning_keeps_window() {
        let records: Vec<EpisodeRecord> = (0..20)
            .map(|episode| EpisodeRecord {
                episode,
                mean_reward: 0.0,
                coop_level: 0.0,
                learner_coop_level: None,
                census: Default::default(),
            })
            .collect();
        let kept: Vec<usize> = thinned(&records, 5, 3).map(|r| r.episode).collect();
        assert_eq!(kept, vec![0, 5, 10, 15, 17, 18, 19]);
        assert_eq!(thinned(&records, 1, 3).count(), 20);
    }

    #[test]
    fn episode_header_columns() {
        assert_eq!(episode_csv_header(false).split(',').count(), 19);
        assert_eq!(episode_csv_header(true).split(',').count(), 35);
    }

    #[test]
    fn spec_parses_from_toml() {
        let text = r#"
            runs_per_point = 3
            output = "results/fig3a"
            [base]
            episodes = 100
            chi = 0.001
            [base.payoff]
            benefit = 5.0
            cost = 1.0
            [base.learner]
            alpha = 0.6
            [sweep]
            norm = [9, 0]
            seed_fraction = [0.0, 0.2]
            mode = ["decentralized"]
        "#;
        let spec: ExperimentSpec = toml::from_str(text).unwrap();
        assert_eq!(spec.runs_per_point, 3);
        assert_eq!(spec.base.learner.alpha, 0.6);
        assert_eq!(spec.base.learner.beta, 1e-2);
        assert_eq!(spec.sweep.mode, vec![Judging::Decentralized]);
        assert_eq!(spec.points().len(), 4);
        assert!(toml::from_str::<ExperimentSpec>("[base]\nnorm = 16").is_err());
        assert!(toml::from_str::<ExperimentSpec>("[base]\nchi = 0.7").is_err());
        assert!(toml::from_str::<ExperimentSpec>("[base]\nbogus = 1").is_err());
    }
}
