//! Reading learned Q-tables back as action rules and social norms, and
//! pooling run results across seeds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{Action, ActionRule, Reputation, SocialNorm};
use crate::learning::{JudgeState, PlayState, QTable};
use crate::sim::{RunSummary, SimConfig};

/// The action rule a table plays greedily. Ties go to defection; the flag
/// reports whether any play state was tied.
pub fn extract_rule(q: &QTable) -> (ActionRule, bool) {
    let mut bits = [0u8; 4];
    let mut tied = false;
    for s in PlayState::all() {
        let (choice, tie) = q.greedy(s);
        bits[s.index()] = choice;
        tied |= tie;
    }
    (ActionRule::from_bits(bits), tied)
}

/// The social norm a table judges by greedily. Ties go to reputation 0.
pub fn extract_norm(q: &QTable) -> Result<(SocialNorm, bool)> {
    if !q.has_judge_states() {
        return Err(Error::NoJudgeStates);
    }
    let mut bits = [0u8; 4];
    let mut tied = false;
    for s in JudgeState::all() {
        let (choice, tie) = q.greedy(s);
        bits[s.index()] = choice;
        tied |= tie;
    }
    Ok((SocialNorm::from_bits(bits), tied))
}

/// A play-only table whose greedy policy is exactly `rule`, with a margin of 1.
pub fn table_for_rule(rule: ActionRule) -> QTable {
    let mut q = QTable::new();
    for s in PlayState::all() {
        let a = rule.action(s.own, s.opp);
        q.set(s, a.bit(), 1.0);
    }
    q
}

/// A table with judge states whose greedy judgments are exactly `norm`.
pub fn table_for_norm(norm: SocialNorm) -> QTable {
    let mut q = QTable::with_judging();
    for s in JudgeState::all() {
        let r: Reputation = norm.judge(s.action, s.opp);
        q.set(s, r.bit(), 1.0);
    }
    q
}

/// How many learners' greedy policies match each rule (and norm, when judging
/// is learned). Tied tables are counted under their tie-broken code and
/// also counted in `unconverged`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyCensus {
    pub rule_counts: [u32; 16],
    pub norm_counts: Option<[u32; 16]>,
    pub unconverged: u32,
}

impl PolicyCensus {
    pub fn from_tables<'a>(tables: impl IntoIterator<Item = &'a QTable>) -> Self {
        let mut census = PolicyCensus::default();
        for q in tables {
            census.record(q);
        }
        census
    }

    pub fn record(&mut self, q: &QTable) {
        let (rule, mut tied) = extract_rule(q);
        self.rule_counts[rule.code() as usize] += 1;
        if let Ok((norm, norm_tied)) = extract_norm(q) {
            self.norm_counts.get_or_insert([0; 16])[norm.code() as usize] += 1;
            tied |= norm_tied;
        }
        if tied {
            self.unconverged += 1;
        }
    }

    pub fn learners(&self) -> u32 {
        self.rule_counts.iter().sum()
    }

    pub fn merge(&mut self, other: &PolicyCensus) {
        for (a, b) in self.rule_counts.iter_mut().zip(other.rule_counts) {
            *a += b;
        }
        if let Some(theirs) = other.norm_counts {
            let ours = self.norm_counts.get_or_insert([0; 16]);
            for (a, b) in ours.iter_mut().zip(theirs) {
                *a += b;
            }
        }
        self.unconverged += other.unconverged;
    }

    /// Fraction of learners on `rule`; `None` with no learners.
    pub fn rule_share(&self, rule: ActionRule) -> Option<f64> {
        share(&self.rule_counts, rule.code())
    }

    pub fn norm_share(&self, norm: SocialNorm) -> Option<f64> {
        self.norm_counts.as_ref().and_then(|c| share(c, norm.code()))
    }

    /// Most common rule, lowest code on ties. `None` with no learners.
    pub fn dominant_rule(&self) -> Option<ActionRule> {
        modal(&self.rule_counts).map(|c| ActionRule::new(c).expect("index below 16"))
    }

    pub fn dominant_norm(&self) -> Option<SocialNorm> {
        self.norm_counts
            .as_ref()
            .and_then(modal)
            .map(|c| SocialNorm::new(c).expect("index below 16"))
    }
}

fn share(counts: &[u32; 16], code: u8) -> Option<f64> {
    let total: u32 = counts.iter().sum();
    (total > 0).then(|| counts[code as usize] as f64 / total as f64)
}

fn modal(counts: &[u32; 16]) -> Option<u8> {
    let (code, &best) = counts
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| a.cmp(b).then(j.cmp(i)))?;
    (best > 0).then_some(code as u8)
}

/// Mean and spread of `coop_final` over runs that differ only in seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub runs: usize,
    /// Runs that produced a final-window value; the statistics use only these.
    pub runs_with_data: usize,
    pub coop_mean: Option<f64>,
    /// Sample standard deviation; 0 for a single run.
    pub coop_std: Option<f64>,
    pub learner_coop_mean: Option<f64>,
    pub census: PolicyCensus,
}

/// Pools `runs`. All runs must share a configuration up to `rng_seed`.
pub fn aggregate(runs: &[RunSummary]) -> Result<SweepPoint> {
    if let Some(first) = runs.first() {
        let key = first.config.without_seed();
        if runs.iter().any(|r| r.config.without_seed() != key) {
            return Err(Error::MixedConfigurations);
        }
    }
    // sort so the floating-point sums are independent of input order
    let mut coop: Vec<f64> = runs.iter().filter_map(|r| r.coop_final).collect();
    coop.sort_by(f64::total_cmp);
    let mut learner: Vec<f64> = runs.iter().filter_map(|r| r.learner_coop_final).collect();
    learner.sort_by(f64::total_cmp);

    let mut census = PolicyCensus::default();
    for r in runs {
        census.merge(&r.final_census);
    }
    let (coop_mean, coop_std) = mean_std(&coop);
    Ok(SweepPoint {
        runs: runs.len(),
        runs_with_data: coop.len(),
        coop_mean,
        coop_std,
        learner_coop_mean: mean_std(&learner).0,
        census,
    })
}

pub(crate) fn mean_std(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (Some(mean), Some(0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (Some(mean), Some(var.sqrt()))
}

impl SimConfig {
    /// This configuration with the seed zeroed, for grouping runs.
    pub fn without_seed(&self) -> SimConfig {
        SimConfig {
            rng_seed: 0,
            ..self.clone()
        }
    }
}

/// Whether `rule` conditions on the opponent's reputation in a way that can
/// sustain cooperation with a reputation label (rules 5 and 10).
pub fn is_discriminating(rule: ActionRule) -> bool {
    rule == ActionRule::DISCRIMINATOR || rule == ActionRule::ANTI_DISCRIMINATOR
}

/// Greedy action of `q` in `(own, opp)`.
pub fn greedy_action(q: &QTable, own: Reputation, opp: Reputation) -> Action {
    Action::from_bit(q.greedy(PlayState::new(own, opp)).0)
}
