//! Steps a population one encounter at a time.

use repdyn::sim::Simulation;
use repdyn::{Reputation, SimConfig};

fn main() -> repdyn::Result<()> {
    let mut sim = Simulation::new(SimConfig {
        n_agents: 4,
        seed_fraction: 0.5,
        ..SimConfig::default()
    })?;
    sim.randomize_reputations();
    let show = |sim: &Simulation| {
        sim.agents()
            .iter()
            .map(|a| if a.reputation == Reputation::One { '1' } else { '0' })
            .collect::<String>()
    };
    println!("reputations {}", show(&sim));
    for (i, j) in [(0, 2), (1, 3), (2, 3)] {
        let out = sim.run_encounter(i, j)?;
        println!(
            "{i} vs {j}: actions {} / {}  payoffs {} / {}  -> {}",
            out.actions.0,
            out.actions.1,
            out.payoffs.0,
            out.payoffs.1,
            show(&sim)
        );
    }
    Ok(())
}
