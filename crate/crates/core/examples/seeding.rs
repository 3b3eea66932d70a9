//! Cooperation as a growing share of the population is fixed to rule 5.
//!
//!     cargo run --release --example seeding -- [episodes] [seeds]

use repdyn::{run_simulation, SimConfig};

fn main() -> repdyn::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let episodes = args.next().unwrap_or(5_000);
    let seeds = args.next().unwrap_or(3) as u64;

    println!("seed_fraction  coop   learner_coop");
    for sf in [0.0, 0.1, 0.2, 0.3, 0.4, 0.5] {
        let (mut coop, mut learner) = (0.0, 0.0);
        for seed in 0..seeds {
            let config = SimConfig {
                episodes,
                seed_fraction: sf,
                rng_seed: seed,
                ..SimConfig::default()
            };
            let s = run_simulation(&config)?.summary;
            coop += s.coop_final.unwrap_or(0.0);
            learner += s.learner_coop_final.unwrap_or(0.0);
        }
        let n = seeds as f64;
        println!("{sf:>13}  {:.3}  {:.3}", coop / n, learner / n);
    }
    Ok(())
}
