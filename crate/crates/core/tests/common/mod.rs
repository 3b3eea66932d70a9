#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use repdyn::egt::prob_good_next;
use repdyn::{ActionRule, ErrorRate, Reputation, SocialNorm};

/// Time-average of reputation 1 for one agent playing `rule` against
/// opponents whose reputation is 1 with probability `g_opp`, with a
/// batch-means standard error.
pub fn simulate_chain(
    rule: ActionRule,
    norm: SocialNorm,
    chi: ErrorRate,
    g_opp: f64,
    batches: usize,
    batch_len: usize,
    seed: u64,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut own = Reputation::One;
    // burn-in
    for _ in 0..batch_len {
        own = step(rule, norm, chi, own, g_opp, &mut rng);
    }
    let means: Vec<f64> = (0..batches)
        .map(|_| {
            let mut good = 0usize;
            for _ in 0..batch_len {
                own = step(rule, norm, chi, own, g_opp, &mut rng);
                good += own.bit() as usize;
            }
            good as f64 / batch_len as f64
        })
        .collect();
    let n = batches as f64;
    let mean = means.iter().sum::<f64>() / n;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn step(rule: ActionRule, norm: SocialNorm, chi: ErrorRate, own: Reputation, g_opp: f64, rng: &mut ChaCha8Rng) -> Reputation {
    let opp = Reputation::from_bit(rng.gen_bool(g_opp) as u8);
    let intended = norm.judge(rule.action(own, opp), opp);
    repdyn::assign_with_error(intended, chi, rng)
}

/// The one-step probability used by the analytical chain, for cross-checks.
pub fn analytic_step(rule: ActionRule, norm: SocialNorm, chi: ErrorRate, own: Reputation, g_opp: f64) -> f64 {
    prob_good_next(rule, norm, chi, own, g_opp)
}
