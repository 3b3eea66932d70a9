//! Sweeps the introspection weight and reports cooperation plus the share of
//! learners on each reputation-conditional rule.
//!
//!     cargo run --release --example introspection -- [episodes] [seeds]

use repdyn::{run_simulation, ActionRule, PolicyCensus, SimConfig};

fn main() -> repdyn::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let episodes = args.next().unwrap_or(3_000);
    let seeds = args.next().unwrap_or(3) as u64;

    println!("alpha  coop   rule5  rule10");
    for alpha in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
        let mut coop = 0.0;
        let mut census = PolicyCensus::default();
        for seed in 0..seeds {
            let mut config = SimConfig {
                episodes,
                rng_seed: seed,
                ..SimConfig::default()
            };
            config.learner.alpha = alpha;
            let s = run_simulation(&config)?.summary;
            coop += s.coop_final.unwrap_or(0.0);
            census.merge(&s.final_census);
        }
        println!(
            "{alpha:>5}  {:.3}  {:.3}  {:.3}",
            coop / seeds as f64,
            census.rule_share(ActionRule::DISCRIMINATOR).unwrap_or(0.0),
            census.rule_share(ActionRule::ANTI_DISCRIMINATOR).unwrap_or(0.0),
        );
    }
    Ok(())
}
