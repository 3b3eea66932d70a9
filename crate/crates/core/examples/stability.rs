//! Analytical stability of every action rule under one norm, and the
//! stable pairs across all 256 rule/norm combinations.
//!
//!     cargo run --release --example stability -- [norm]

use repdyn::egt::{full_scan, stability_scan};
use repdyn::{ErrorRate, PayoffParams, SocialNorm};

fn main() -> repdyn::Result<()> {
    let code = std::env::args().nth(1).map_or(9, |a| a.parse().expect("norm code"));
    let norm = SocialNorm::new(code)?;
    let chi = ErrorRate::new(1e-3)?;
    let params = PayoffParams::new(5.0, 1.0)?;

    println!("norm {norm}");
    println!("rule  g       payoff  best mutant   stable");
    for v in stability_scan(norm, chi, &params)? {
        println!(
            "{:>4}  {:.4}  {:.3}   {:>2} ({:.3})   {}{}",
            v.resident_rule.code(),
            v.g,
            v.resident_payoff,
            v.worst_mutant.code(),
            v.worst_mutant_payoff,
            v.stable,
            if v.neutral { " (neutral)" } else { "" },
        );
    }

    let strict: Vec<_> = full_scan(chi, &params)?
        .into_iter()
        .filter(|v| v.strictly_stable && v.resident_payoff > 3.9)
        .map(|v| (v.resident_rule.code(), v.norm.code()))
        .collect();
    println!("\nstrictly stable cooperative pairs (rule, norm): {strict:?}");
    Ok(())
}
