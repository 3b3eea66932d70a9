use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use repdyn::egt::{full_scan, stability_scan};
use repdyn::experiment::{load_qtables, run_experiment, run_single, stability_csv, write_atomic, ExperimentSpec, RunOptions};
use repdyn::{Error, ErrorRate, Judging, PayoffParams, PolicyCensus, SocialNorm};

#[derive(Parser)]
#[command(name = "repdyn", version, about = "Reputation-based cooperation with Q-learning agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the base configuration once.
    Run(RunArgs),
    /// Run every point of a sweep, `runs_per_point` times each.
    Sweep(RunArgs),
    /// Stability of monomorphic populations against single-rule mutants.
    Stability(StabilityArgs),
    /// Census of greedy policies in stored Q-table dumps.
    Census(CensusArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Centralized,
    Decentralized,
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; 0 means one per core.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Keep every Nth episode (plus the final window) in episode CSVs.
    #[arg(long, default_value_t = 1)]
    thin: usize,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the final learner Q-tables as JSON.
    #[arg(long)]
    dump_qtables: bool,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    n_agents: Option<usize>,
    #[arg(long)]
    encounters: Option<usize>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    chi: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed_fraction: Option<f64>,
    #[arg(long)]
    norm: Option<u8>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    runs_per_point: Option<usize>,
}

#[derive(Args)]
struct StabilityArgs {
    /// Norm code 0..=15, or `all` for every norm.
    #[arg(long, default_value = "9")]
    norm: String,
    #[arg(long, default_value_t = 1e-3)]
    chi: f64,
    #[arg(long, default_value_t = 5.0)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Directory for `stability.csv`; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CensusArgs {
    /// Q-table dumps written with `--dump-qtables`.
    #[arg(required = true)]
    dumps: Vec<PathBuf>,
    /// Directory for `census.json`; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_spec(args: &RunArgs) -> repdyn::Result<ExperimentSpec> {
    let mut spec = match &args.config {
        Some(path) => ExperimentSpec::load(path)?,
        None => ExperimentSpec::default(),
    };
    let base = &mut spec.base;
    if let Some(v) = args.seed {
        base.rng_seed = v;
    }
    if let Some(v) = args.episodes {
        base.episodes = v;
    }
    if let Some(v) = args.n_agents {
        base.n_agents = v;
    }
    if let Some(v) = args.encounters {
        base.encounters_per_episode = v;
    }
    if let Some(v) = args.b {
        base.payoff.benefit = v;
    }
    if let Some(v) = args.c {
        base.payoff.cost = v;
    }
    if let Some(v) = args.chi {
        base.chi = ErrorRate::new(v)?;
    }
    if let Some(v) = args.alpha {
        base.learner.alpha = v;
    }
    if let Some(v) = args.seed_fraction {
        base.seed_fraction = v;
    }
    if let Some(v) = args.norm {
        base.norm = SocialNorm::new(v)?;
    }
    if let Some(m) = args.mode {
        base.judging = match m {
            Mode::Centralized => Judging::Centralized,
            Mode::Decentralized => Judging::Decentralized,
        };
    }
    if let Some(v) = args.runs_per_point {
        spec.runs_per_point = v;
    }
    if let Some(out) = &args.out {
        spec.output = out.clone();
    }
    Ok(spec)
}

fn options(args: &RunArgs) -> repdyn::Result<RunOptions> {
    if args.thin == 0 {
        return Err(Error::InvalidParameter {
            field: "thin".into(),
            reason: "must be at least 1".into(),
        });
    }
    Ok(RunOptions {
        workers: args.workers,
        thin: args.thin,
        dump_qtables: args.dump_qtables,
    })
}

fn create_dir(dir: &Path) -> repdyn::Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn emit(out: Option<&Path>, name: &str, contents: &str) -> repdyn::Result<()> {
    match out {
        Some(dir) => {
            create_dir(dir)?;
            let path = dir.join(name);
            write_atomic(&path, contents.as_bytes())?;
            println!("{}", path.display());
        }
        None => print!("{contents}"),
    }
    Ok(())
}

fn cmd_run(args: &RunArgs) -> repdyn::Result<()> {
    let spec = load_spec(args)?;
    let options = options(args)?;
    spec.base.validate()?;
    create_dir(&spec.output)?;
    let (output, files) = run_single(&spec.base, &spec.output, &options)?;
    let s = &output.summary;
    eprintln!(
        "coop_final={} learner_coop_final={} dominant_rule={}",
        fmt_opt(s.coop_final),
        fmt_opt(s.learner_coop_final),
        s.final_census.dominant_rule().map_or("none".into(), |r| r.to_string()),
    );
    for f in files {
        println!("{}", f.display());
    }
    Ok(())
}

fn cmd_sweep(args: &RunArgs) -> repdyn::Result<()> {
    let spec = load_spec(args)?;
    let options = options(args)?;
    let report = run_experiment(&spec, &options)?;
    for p in &report.points {
        eprintln!(
            "{} coop_mean={} coop_std={}",
            p.id,
            fmt_opt(p.stats.coop_mean),
            fmt_opt(p.stats.coop_std)
        );
    }
    println!("{}", spec.output.join("sweep.csv").display());
    Ok(())
}

fn cmd_stability(args: &StabilityArgs) -> repdyn::Result<()> {
    let chi = ErrorRate::new(args.chi)?;
    let params = PayoffParams::new(args.b, args.c)?;
    let verdicts = if args.norm.eq_ignore_ascii_case("all") {
        full_scan(chi, &params)?
    } else {
        let code: u8 = args.norm.parse().map_err(|_| Error::InvalidParameter {
            field: "norm".into(),
            reason: format!("expected a code 0..=15 or `all`, got `{}`", args.norm),
        })?;
        stability_scan(SocialNorm::new(code)?, chi, &params)?
    };
    emit(args.out.as_deref(), "stability.csv", &stability_csv(&verdicts))
}

fn cmd_census(args: &CensusArgs) -> repdyn::Result<()> {
    let mut census = PolicyCensus::default();
    for path in &args.dumps {
        census.merge(&PolicyCensus::from_tables(&load_qtables(path)?));
    }
    let report = json!({
        "learners": census.learners(),
        "dominant_rule": census.dominant_rule().map(|r| r.code()),
        "dominant_norm": census.dominant_norm().map(|n| n.code()),
        "census": census,
    });
    let text = serde_json::to_string_pretty(&report)? + "\n";
    emit(args.out.as_deref(), "census.json", &text)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("none".into(), |x| format!("{x:.4}"))
}

fn error_report(e: &Error) -> serde_json::Value {
    let kind = match e {
        Error::InvalidParameter { .. } => "invalid_parameter",
        Error::SelfEncounter(_) => "self_encounter",
        Error::NoJudgeStates => "no_judge_states",
        Error::MixedConfigurations => "mixed_configurations",
        Error::Io { .. } => "io",
        Error::Config { .. } => "config",
        Error::Json(_) => "json",
    };
    let mut report = json!({ "error": kind, "message": e.to_string() });
    match e {
        Error::InvalidParameter { field, .. } => report["field"] = json!(field),
        Error::Io { path, .. } | Error::Config { path, .. } => report["path"] = json!(path),
        _ => {}
    }
    report
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Stability(a) => cmd_stability(a),
        Command::Census(a) => cmd_census(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "{}", error_report(&e));
            ExitCode::from(2)
        }
    }
}
