//! Reads greedy rules back out of trained Q-tables and tallies them.

use repdyn::analysis::table_for_rule;
use repdyn::{extract_rule, run_simulation, ActionRule, PolicyCensus, SimConfig};

fn main() -> repdyn::Result<()> {
    let q = table_for_rule(ActionRule::DISCRIMINATOR);
    println!("synthetic table -> rule {}", extract_rule(&q).0);

    let config = SimConfig {
        episodes: 2_000,
        seed_fraction: 0.2,
        ..SimConfig::default()
    };
    let output = run_simulation(&config)?;
    for (i, q) in output.final_tables.iter().enumerate() {
        let (rule, tied) = extract_rule(q);
        println!("learner {i}: rule {rule}{}", if tied { " (tied)" } else { "" });
    }
    let census = PolicyCensus::from_tables(&output.final_tables);
    println!("dominant rule: {:?}", census.dominant_rule().map(|r| r.code()));
    println!("unconverged:   {}", census.unconverged);
    Ok(())
}
