//! Learners under stern judging with no seeding or introspection, at three
//! benefit-to-cost ratios.
//!
//!     cargo run --release --example baseline -- [episodes] [seeds]

use repdyn::{run_simulation, PayoffParams, SimConfig, SocialNorm};

fn main() -> repdyn::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("integer argument"));
    let episodes = args.next().unwrap_or(2_000);
    let seeds = args.next().unwrap_or(3) as u64;

    for norm in [SocialNorm::STERN_JUDGING, SocialNorm::ALL_BAD] {
        for b in [2.0, 5.0, 10.0] {
            let mut total = 0.0;
            for seed in 0..seeds {
                let config = SimConfig {
                    episodes,
                    payoff: PayoffParams::new(b, 1.0)?,
                    norm,
                    rng_seed: seed,
                    ..SimConfig::default()
                };
                total += run_simulation(&config)?.summary.coop_final.unwrap_or(0.0);
            }
            println!("norm {:>2}  b/c {:>4}  coop {:.3}", norm.code(), b, total / seeds as f64);
        }
    }
    Ok(())
}
