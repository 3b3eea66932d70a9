use std::fs;
use std::path::Path;
use std::process::Command;

use repdyn::experiment::{load_qtables, run_experiment, ExperimentSpec, RunOptions};
use repdyn::{Judging, SimConfig};

fn spec(dir: &Path) -> ExperimentSpec {
    ExperimentSpec {
        base: SimConfig {
            episodes: 10,
            encounters_per_episode: 50,
            ..SimConfig::default()
        },
        runs_per_point: 1,
        output: dir.to_path_buf(),
        ..ExperimentSpec::default()
    }
}

fn files_under(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn one_point_one_run_writes_one_csv_and_one_summary() {
    let tmp = tempfile::tempdir().unwrap();
    run_experiment(&spec(tmp.path()), &RunOptions::default()).unwrap();
    let runs: Vec<_> = fs::read_dir(tmp.path().join("runs")).unwrap().collect();
    let points: Vec<_> = fs::read_dir(tmp.path().join("points")).unwrap().collect();
    assert_eq!(runs.len(), 1);
    assert_eq!(points.len(), 1);
    let csv = fs::read_to_string(runs[0].as_ref().unwrap().path()).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 11);
    assert!(lines[0].starts_with("episode,mean_reward,coop_level,rule_census_0,"));
    assert_eq!(lines[0].split(',').count(), 19);
    let sweep = fs::read_to_string(tmp.path().join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 2);
}

#[test]
fn worker_count_does_not_change_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut s = spec(a.path());
    s.runs_per_point = 3;
    s.sweep.seed_fraction = vec![0.0, 0.3];
    s.sweep.mode = vec![Judging::Centralized, Judging::Decentralized];
    let opts = |workers| RunOptions {
        workers,
        dump_qtables: true,
        ..RunOptions::default()
    };
    run_experiment(&s, &opts(1)).unwrap();
    s.output = b.path().to_path_buf();
    run_experiment(&s, &opts(4)).unwrap();
    let (fa, fb) = (files_under(a.path()), files_under(b.path()));
    assert_eq!(fa.len(), 12 * 2 + 4 + 1);
    assert_eq!(fa, fb);
}

#[test]
fn decentralized_csv_has_norm_columns_and_tables_reload() {
    let tmp = tempfile::tempdir().unwrap();
    let mut s = spec(tmp.path());
    s.base.judging = Judging::Decentralized;
    let opts = RunOptions {
        dump_qtables: true,
        ..RunOptions::default()
    };
    let report = run_experiment(&s, &opts).unwrap();
    let csv = report.files.iter().find(|p| p.to_string_lossy().ends_with("episodes.csv")).unwrap();
    let header = fs::read_to_string(csv).unwrap().lines().next().unwrap().to_string();
    assert_eq!(header.split(',').count(), 35);
    assert!(header.ends_with("norm_census_15"));
    let dump = report.files.iter().find(|p| p.to_string_lossy().ends_with("qtables.json")).unwrap();
    let tables = load_qtables(dump).unwrap();
    assert_eq!(tables.len(), 10);
    assert!(tables.iter().all(|q| q.has_judge_states()));
}

#[test]
fn thinning_keeps_every_nth_and_the_final_window() {
    let tmp = tempfile::tempdir().unwrap();
    let mut s = spec(tmp.path());
    s.base.episodes = 100;
    let opts = RunOptions {
        thin: 10,
        ..RunOptions::default()
    };
    let report = run_experiment(&s, &opts).unwrap();
    let csv = report.files.iter().find(|p| p.to_string_lossy().ends_with("episodes.csv")).unwrap();
    // episodes 0, 10, 20, 30, 40 plus the last 50
    assert_eq!(fs::read_to_string(csv).unwrap().lines().count(), 1 + 5 + 50);
}

#[test]
fn invalid_spec_reports_field() {
    let tmp = tempfile::tempdir().unwrap();
    let mut s = spec(tmp.path());
    s.sweep.b = vec![0.5];
    let err = run_experiment(&s, &RunOptions::default()).unwrap_err();
    assert!(err.to_string().contains("`b`"), "{err}");
}

fn repdyn(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_repdyn")).args(args).output().unwrap()
}

#[test]
fn cli_stability_rows() {
    let out = repdyn(&["stability", "--norm", "9", "--chi", "0.001", "--b", "5", "--c", "1"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 17);
    let rule5 = text.lines().find(|l| l.starts_with("9,5,")).unwrap();
    assert_eq!(rule5.split(',').nth(6), Some("true"));

    let all = repdyn(&["stability", "--norm", "all"]);
    assert_eq!(String::from_utf8(all.stdout).unwrap().lines().count(), 257);
}

#[test]
fn cli_run_sweep_and_census() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("exp.toml");
    fs::write(
        &config,
        "runs_per_point = 2\n[base]\nepisodes = 5\nencounters_per_episode = 20\n[sweep]\nnorm = [9, 0]\n",
    )
    .unwrap();
    let sweep_dir = tmp.path().join("sweep");
    let out = repdyn(&[
        "sweep",
        "--config",
        config.to_str().unwrap(),
        "--out",
        sweep_dir.to_str().unwrap(),
        "--workers",
        "2",
        "--seed",
        "5",
        "--dump-qtables",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sweep = fs::read_to_string(sweep_dir.join("sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 5);
    assert!(sweep.starts_with("b,seed_fraction,alpha,norm,mode,run_index,coop_final,dominant_rule,dominant_norm"));

    let run_dir = tmp.path().join("run");
    let out = repdyn(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        run_dir.to_str().unwrap(),
        "--episodes",
        "8",
        "--thin",
        "2",
        "--dump-qtables",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // flag beats file: 8 episodes, thinned to 0, 2 plus the last 4
    let csv = fs::read_to_string(run_dir.join("episodes.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);

    let out = repdyn(&["census", run_dir.join("qtables.json").to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["learners"], 10);
}

#[test]
fn cli_errors_are_structured() {
    let out = repdyn(&["run", "--chi", "0.7"]);
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"], "invalid_parameter");
    assert_eq!(v["field"], "chi");

    let out = repdyn(&["sweep", "--config", "/nonexistent/exp.toml"]);
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"], "io");
}
