//! A small seeding sweep written to disk in the same layout as `repdyn sweep`.
//!
//!     cargo run --release --example sweep -- [out_dir]

use repdyn::experiment::{run_experiment, ExperimentSpec, RunOptions};

const SPEC: &str = r#"
runs_per_point = 2
output = "sweep-out"

[base]
episodes = 500
rng_seed = 7

[sweep]
seed_fraction = [0.0, 0.2]
norm = [9, 0]
"#;

fn main() -> repdyn::Result<()> {
    let mut spec: ExperimentSpec = toml::from_str(SPEC).expect("valid spec");
    if let Some(dir) = std::env::args().nth(1) {
        spec.output = dir.into();
    }
    let report = run_experiment(&spec, &RunOptions::default())?;
    for p in &report.points {
        println!("{:<32} coop {:.3}", p.id, p.stats.coop_mean.unwrap_or(0.0));
    }
    println!("{} files under {}", report.files.len(), spec.output.display());
    Ok(())
}
