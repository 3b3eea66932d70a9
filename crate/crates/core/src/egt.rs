//! Analytical stability baseline for monomorphic, infinitely large populations.
//!
//! Each agent's reputation is a two-state Markov chain: it meets an opponent
//! whose reputation is 1 with probability `g`, acts by its rule, and is
//! reassigned by the norm with error `chi`. For a resident rule the
//! population fraction `g` must reproduce itself, which is solved as a damped
//! fixed-point iteration. A single mutant faces residents drawn from that
//! fixed point, so its own chain needs no iteration.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::{payoff, Action, ActionRule, ErrorRate, PayoffParams, Reputation, SocialNorm};

pub const TOLERANCE: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 100_000;
pub const DAMPING: f64 = 0.5;
/// Payoff differences within this margin count as ties.
pub const TIE_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryReputation {
    /// Long-run probability of holding reputation 1.
    pub g: f64,
    /// `[P(rep = 0), P(rep = 1)]`.
    pub own_rep_dist: [f64; 2],
    pub converged: bool,
    pub iterations: usize,
    /// `|g_out - g_in|` at the last iterate.
    pub residual: f64,
}

impl StationaryReputation {
    fn new(g: f64, converged: bool, iterations: usize, residual: f64) -> Self {
        StationaryReputation {
            g,
            own_rep_dist: [1.0 - g, g],
            converged,
            iterations,
            residual,
        }
    }
}

/// Probability of being assigned reputation 1 after one encounter, for an
/// agent playing `rule` from `own` against opponents with P(rep = 1) = `g_opp`.
pub fn prob_good_next(rule: ActionRule, norm: SocialNorm, chi: ErrorRate, own: Reputation, g_opp: f64) -> f64 {
    let chi = chi.value();
    Reputation::ALL
        .iter()
        .map(|&opp| {
            let p_opp = if opp == Reputation::One { g_opp } else { 1.0 - g_opp };
            let intended = norm.judge(rule.action(own, opp), opp).bit() as f64;
            p_opp * (chi + (1.0 - 2.0 * chi) * intended)
        })
        .sum()
}

/// Stationary P(rep = 1) of the two-state chain. When both states are
/// absorbing (only possible with `chi == 0`) the chain keeps `fallback`.
pub fn chain_stationary(rule: ActionRule, norm: SocialNorm, chi: ErrorRate, g_opp: f64, fallback: f64) -> f64 {
    let up = prob_good_next(rule, norm, chi, Reputation::Zero, g_opp);
    let down = 1.0 - prob_good_next(rule, norm, chi, Reputation::One, g_opp);
    let total = up + down;
    if total <= 0.0 {
        fallback
    } else {
        up / total
    }
}

/// Self-consistent good fraction of a population playing `rule` under `norm`,
/// starting from `g = 0.5`.
pub fn stationary_good_fraction(rule: ActionRule, norm: SocialNorm, chi: ErrorRate) -> StationaryReputation {
    stationary_good_fraction_from(rule, norm, chi, 0.5)
}

pub fn stationary_good_fraction_from(rule: ActionRule, norm: SocialNorm, chi: ErrorRate, start: f64) -> StationaryReputation {
    let mut g = start.clamp(0.0, 1.0);
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let next = chain_stationary(rule, norm, chi, g, g);
        residual = (next - g).abs();
        if residual <= TOLERANCE {
            return StationaryReputation::new(next, true, it, residual);
        }
        g = (1.0 - DAMPING) * g + DAMPING * next;
    }
    StationaryReputation::new(g, false, MAX_ITERATIONS, residual)
}

/// Expected payoff of a `focal` player (rep ~ `focal_g`) against an `other`
/// player (rep ~ `other_g`), reputations drawn independently.
fn pair_payoff(focal: ActionRule, focal_g: f64, other: ActionRule, other_g: f64, params: &PayoffParams) -> f64 {
    let p = |rep: Reputation, g: f64| if rep == Reputation::One { g } else { 1.0 - g };
    let mut total = 0.0;
    for own in Reputation::ALL {
        for opp in Reputation::ALL {
            let weight = p(own, focal_g) * p(opp, other_g);
            if weight == 0.0 {
                continue;
            }
            let mine: Action = focal.action(own, opp);
            let theirs: Action = other.action(opp, own);
            total += weight * payoff(mine, theirs, params);
        }
    }
    total
}

/// Per-encounter payoff and stationary state of a monomorphic resident population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidentPayoff {
    pub payoff: f64,
    pub stationary: StationaryReputation,
}

pub fn resident_payoff(rule: ActionRule, norm: SocialNorm, chi: ErrorRate, params: &PayoffParams) -> ResidentPayoff {
    let stationary = stationary_good_fraction(rule, norm, chi);
    ResidentPayoff {
        payoff: pair_payoff(rule, stationary.g, rule, stationary.g, params),
        stationary,
    }
}

/// Payoff of a lone `mutant` in a resident population whose stationary state is `resident`.
pub fn mutant_payoff_against(
    mutant: ActionRule,
    resident_rule: ActionRule,
    resident: &StationaryReputation,
    norm: SocialNorm,
    chi: ErrorRate,
    params: &PayoffParams,
) -> f64 {
    let g = resident.g;
    let h = if mutant == resident_rule {
        g
    } else {
        chain_stationary(mutant, norm, chi, g, g)
    };
    pair_payoff(mutant, h, resident_rule, g, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutantPayoff {
    pub payoff: f64,
    /// Whether the resident fixed point behind this value converged.
    pub converged: bool,
}

pub fn mutant_payoff(
    mutant: ActionRule,
    resident: ActionRule,
    norm: SocialNorm,
    chi: ErrorRate,
    params: &PayoffParams,
) -> MutantPayoff {
    let stationary = stationary_good_fraction(resident, norm, chi);
    MutantPayoff {
        payoff: mutant_payoff_against(mutant, resident, &stationary, norm, chi, params),
        converged: stationary.converged,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub resident_rule: ActionRule,
    pub norm: SocialNorm,
    pub g: f64,
    pub resident_payoff: f64,
    /// The mutant rule with the highest payoff (lowest code on ties).
    pub worst_mutant: ActionRule,
    pub worst_mutant_payoff: f64,
    /// No mutant earns more than the resident beyond [`TIE_MARGIN`].
    pub stable: bool,
    /// Every mutant earns strictly less than the resident, by more than [`TIE_MARGIN`].
    pub strictly_stable: bool,
    /// Stable, but the best mutant ties the resident within [`TIE_MARGIN`].
    pub neutral: bool,
    pub converged: bool,
}

pub fn verdict(rule: ActionRule, norm: SocialNorm, chi: ErrorRate, params: &PayoffParams) -> StabilityVerdict {
    let resident = resident_payoff(rule, norm, chi, params);
    let (worst_mutant, worst_mutant_payoff) = ActionRule::all()
        .filter(|&m| m != rule)
        .map(|m| (m, mutant_payoff_against(m, rule, &resident.stationary, norm, chi, params)))
        .fold(None, |best: Option<(ActionRule, f64)>, (m, p)| match best {
            Some((_, bp)) if bp >= p => best,
            _ => Some((m, p)),
        })
        .expect("fifteen mutants");
    let margin = resident.payoff - worst_mutant_payoff;
    StabilityVerdict {
        resident_rule: rule,
        norm,
        g: resident.stationary.g,
        resident_payoff: resident.payoff,
        worst_mutant,
        worst_mutant_payoff,
        stable: margin >= -TIE_MARGIN,
        strictly_stable: margin > TIE_MARGIN,
        neutral: margin.abs() <= TIE_MARGIN,
        converged: resident.stationary.converged,
    }
}

fn sort_verdicts(verdicts: &mut [StabilityVerdict]) {
    verdicts.sort_by(|a, b| {
        b.resident_payoff
            .total_cmp(&a.resident_payoff)
            .then(a.norm.cmp(&b.norm))
            .then(a.resident_rule.cmp(&b.resident_rule))
    });
}

/// Verdicts for all 16 resident rules under `norm`, best resident payoff first.
pub fn stability_scan(norm: SocialNorm, chi: ErrorRate, params: &PayoffParams) -> Result<Vec<StabilityVerdict>> {
    params.validate()?;
    let mut verdicts: Vec<_> = ActionRule::all().map(|r| verdict(r, norm, chi, params)).collect();
    sort_verdicts(&mut verdicts);
    Ok(verdicts)
}

/// All 256 (rule, norm) verdicts, best resident payoff first.
pub fn full_scan(chi: ErrorRate, params: &PayoffParams) -> Result<Vec<StabilityVerdict>> {
    params.validate()?;
    let pairs: Vec<(ActionRule, SocialNorm)> = SocialNorm::all()
        .flat_map(|n| ActionRule::all().map(move |r| (r, n)))
        .collect();
    let mut verdicts: Vec<_> = pairs.par_iter().map(|&(r, n)| verdict(r, n, chi, params)).collect();
    sort_verdicts(&mut verdicts);
    Ok(verdicts)
}

/// The rule and norm obtained by swapping the two reputation labels.
pub fn relabel(rule: ActionRule, norm: SocialNorm) -> (ActionRule, SocialNorm) {
    let flip = Reputation::flipped;
    let mut rule_bits = [0u8; 4];
    let mut norm_bits = [0u8; 4];
    for own in Reputation::ALL {
        for opp in Reputation::ALL {
            rule_bits[2 * own.bit() as usize + opp.bit() as usize] = rule.action(flip(own), flip(opp)).bit();
        }
    }
    for action in Action::ALL {
        for opp in Reputation::ALL {
            norm_bits[2 * action.bit() as usize + opp.bit() as usize] = flip(norm.judge(action, flip(opp))).bit();
        }
    }
    (ActionRule::from_bits(rule_bits), SocialNorm::from_bits(norm_bits))
}
