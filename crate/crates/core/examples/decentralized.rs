//! Learners that also act as judges: each encounter is judged by a random
//! third agent using its own learned norm.
//!
//!     cargo run --release --example decentralized -- [episodes] [seed_fraction] [alpha]

use repdyn::{run_simulation, Judging, SimConfig};

fn main() -> repdyn::Result<()> {
    let mut args = std::env::args().skip(1);
    let episodes = args.next().map_or(3_000, |a| a.parse().expect("episodes"));
    let seed_fraction = args.next().map_or(0.5, |a| a.parse().expect("seed fraction"));
    let alpha = args.next().map_or(0.6, |a| a.parse().expect("alpha"));

    let mut config = SimConfig {
        episodes,
        seed_fraction,
        judging: Judging::Decentralized,
        ..SimConfig::default()
    };
    config.learner.alpha = alpha;
    let s = run_simulation(&config)?.summary;

    println!("coop_final    {:.3}", s.coop_final.unwrap_or(0.0));
    println!("learner coop  {:.3}", s.learner_coop_final.unwrap_or(0.0));
    println!("rules  {:?}", s.final_census.rule_counts);
    if let Some(norms) = s.final_census.norm_counts {
        println!("norms  {norms:?}");
    }
    Ok(())
}
