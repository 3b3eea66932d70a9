//! Episode orchestration: random matching, reputation bookkeeping under a
//! central norm or third-party judges, seeded agents, and per-episode metrics.
//!
//! A run owns one ChaCha8 stream seeded from [`SimConfig::rng_seed`] and is
//! strictly sequential, so equal configurations give equal record streams.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::PolicyCensus;
use crate::error::{Error, Result};
use crate::game::{assign_with_error, payoff, Action, ActionRule, ErrorRate, PayoffParams, Reputation, SocialNorm};
use crate::learning::{
    introspective_reward, learn_episode, select_action, JudgeState, LearnerParams, PlayState, QTable, TrajectoryBuffer,
};

/// Who assigns reputations after an encounter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Judging {
    /// The configured norm judges every encounter.
    Centralized,
    /// A randomly drawn third agent judges each encounter with its own norm.
    Decentralized,
}

/// Whether and how seeded agents judge in decentralized mode. By default they
/// only play their rule and are never drawn as judges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "norm")]
#[derive(Default)]
pub enum SeedJudging {
    /// Every seeded agent judges with the same fixed norm.
    Fixed(SocialNorm),
    /// Each seeded agent gets its own uniformly random norm when the run starts.
    Random,
    /// Seeded agents are never drawn as judges.
    #[default]
    Excluded,
}


#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_agents: usize,
    pub episodes: usize,
    /// Encounters (K) per episode.
    pub encounters_per_episode: usize,
    pub payoff: PayoffParams,
    pub chi: ErrorRate,
    pub learner: LearnerParams,
    /// Fraction of the population that plays `seeded_rule` and never learns.
    pub seed_fraction: f64,
    pub seeded_rule: ActionRule,
    pub seed_judging: SeedJudging,
    pub judging: Judging,
    /// Norm used in centralized mode; ignored when decentralized.
    pub norm: SocialNorm,
    pub rng_seed: u64,
    /// Fraction of final episodes averaged into `coop_final`.
    pub metric_window: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_agents: 10,
            episodes: 10_000,
            encounters_per_episode: 200,
            payoff: PayoffParams::default(),
            chi: ErrorRate::new(1e-3).expect("valid default"),
            learner: LearnerParams::default(),
            seed_fraction: 0.0,
            seeded_rule: ActionRule::DISCRIMINATOR,
            seed_judging: SeedJudging::default(),
            judging: Judging::Centralized,
            norm: SocialNorm::STERN_JUDGING,
            rng_seed: 0,
            metric_window: 0.5,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.payoff.validate()?;
        self.learner.validate()?;
        ErrorRate::new(self.chi.value())?;
        if self.n_agents < 2 {
            return Err(Error::invalid("n_agents", format!("need at least 2 agents, got {}", self.n_agents)));
        }
        if self.judging == Judging::Decentralized && self.n_agents < 3 {
            return Err(Error::invalid(
                "n_agents",
                "decentralized judging needs a third agent to act as judge",
            ));
        }
        if self.encounters_per_episode == 0 {
            return Err(Error::invalid("encounters_per_episode", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.seed_fraction) {
            return Err(Error::invalid(
                "seed_fraction",
                format!("must be in [0, 1], got {}", self.seed_fraction),
            ));
        }
        if !(self.metric_window > 0.0 && self.metric_window <= 1.0) {
            return Err(Error::invalid(
                "metric_window",
                format!("must be in (0, 1], got {}", self.metric_window),
            ));
        }
        Ok(())
    }

    pub fn seeded_count(&self) -> usize {
        ((self.seed_fraction * self.n_agents as f64).round() as usize).min(self.n_agents)
    }

    pub fn learner_count(&self) -> usize {
        self.n_agents - self.seeded_count()
    }

    /// Number of trailing episodes averaged into `coop_final`.
    pub fn window_len(&self) -> usize {
        if self.episodes == 0 {
            return 0;
        }
        ((self.metric_window * self.episodes as f64).round() as usize).clamp(1, self.episodes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AgentKind {
    Learner { q: QTable, buffer: TrajectoryBuffer },
    /// Plays a fixed rule; judges with `norm` when drawn as a judge, never if `None`.
    Seeded { rule: ActionRule, norm: Option<SocialNorm> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub kind: AgentKind,
    pub reputation: Reputation,
}

impl Agent {
    pub fn is_learner(&self) -> bool {
        matches!(self.kind, AgentKind::Learner { .. })
    }

    pub fn q_table(&self) -> Option<&QTable> {
        match &self.kind {
            AgentKind::Learner { q, .. } => Some(q),
            AgentKind::Seeded { .. } => None,
        }
    }

    fn can_judge(&self) -> bool {
        !matches!(self.kind, AgentKind::Seeded { norm: None, .. })
    }
}

/// What happened in one encounter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncounterOutcome {
    pub actions: (Action, Action),
    pub payoffs: (f64, f64),
    /// Third-party judge, decentralized mode only.
    pub judge: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    /// Mean extrinsic payoff per agent per encounter played.
    pub mean_reward: f64,
    /// `mean_reward / (b - c)`, clamped to [0, 1].
    pub coop_level: f64,
    /// Learners' mean extrinsic payoff over `b - c`, unclamped; `None` when no
    /// learner played.
    pub learner_coop_level: Option<f64>,
    /// Policies of the learners after this episode's update.
    pub census: PolicyCensus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: SimConfig,
    pub episodes: usize,
    pub window_len: usize,
    /// Mean `coop_level` over the final window; `None` when there is no data.
    pub coop_final: Option<f64>,
    pub learner_coop_final: Option<f64>,
    pub final_census: PolicyCensus,
}

impl RunSummary {
    pub fn has_data(&self) -> bool {
        self.coop_final.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub records: Vec<EpisodeRecord>,
    pub summary: RunSummary,
    /// Final table of every learner, in agent order.
    pub final_tables: Vec<QTable>,
}

/// One population and its random stream.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    agents: Vec<Agent>,
    rng: ChaCha8Rng,
    episode: usize,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
        let seeded = config.seeded_count();
        let judging = config.judging == Judging::Decentralized;
        let agents = (0..config.n_agents)
            .map(|i| {
                let kind = if i < seeded {
                    let norm = match config.seed_judging {
                        SeedJudging::Fixed(n) => Some(n),
                        SeedJudging::Random => Some(SocialNorm::new(rng.gen_range(0..16)).expect("below 16")),
                        SeedJudging::Excluded => None,
                    };
                    AgentKind::Seeded {
                        rule: config.seeded_rule,
                        norm,
                    }
                } else {
                    AgentKind::Learner {
                        q: if judging { QTable::with_judging() } else { QTable::new() },
                        buffer: TrajectoryBuffer::new(),
                    }
                };
                Agent {
                    kind,
                    reputation: Reputation::Zero,
                }
            })
            .collect();
        Ok(Simulation {
            config,
            agents,
            rng,
            episode: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    /// Direct access for setting up scenarios (fixed reputations, hand-built tables).
    pub fn agents_mut(&mut self) -> &mut [Agent] {
        &mut self.agents
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn episodes_run(&self) -> usize {
        self.episode
    }

    pub fn learner_tables(&self) -> impl Iterator<Item = &QTable> {
        self.agents.iter().filter_map(Agent::q_table)
    }

    pub fn census(&self) -> PolicyCensus {
        PolicyCensus::from_tables(self.learner_tables())
    }

    fn act(&mut self, i: usize, own: Reputation, opp: Reputation) -> Action {
        let epsilon = self.config.learner.epsilon;
        match &self.agents[i].kind {
            AgentKind::Learner { q, .. } => {
                Action::from_bit(select_action(q, PlayState::new(own, opp), epsilon, &mut self.rng))
            }
            AgentKind::Seeded { rule, .. } => rule.action(own, opp),
        }
    }

    /// Judgment of a party that took `action` against an opponent holding
    /// `opp`, before assignment noise.
    fn judge(&mut self, judge: usize, action: Action, opp: Reputation) -> Reputation {
        let epsilon = self.config.learner.epsilon;
        match &mut self.agents[judge].kind {
            AgentKind::Learner { q, buffer } => {
                let state = JudgeState::new(action, opp);
                let choice = select_action(q, state, epsilon, &mut self.rng);
                buffer.push(state, choice, 0.0);
                Reputation::from_bit(choice)
            }
            AgentKind::Seeded { norm, .. } => norm.expect("excluded seeded agents are never drawn as judges").judge(action, opp),
        }
    }

    fn record_play(&mut self, i: usize, state: PlayState, action: Action, extrinsic: f64) {
        let game = self.config.payoff;
        let learner = self.config.learner;
        if let AgentKind::Learner { q, buffer } = &mut self.agents[i].kind {
            let reward = introspective_reward(extrinsic, q, state.own, &learner, &game, &mut self.rng);
            buffer.push(state, action.bit(), reward);
        }
    }

    fn draw_judge(&mut self, i: usize, j: usize) -> Option<usize> {
        let n = self.agents.len();
        if self.agents.iter().all(Agent::can_judge) {
            // uniform over the n - 2 agents other than i and j
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            let mut k = self.rng.gen_range(0..n - 2);
            if k >= lo {
                k += 1;
            }
            if k >= hi {
                k += 1;
            }
            Some(k)
        } else {
            let eligible: Vec<usize> = (0..n)
                .filter(|&k| k != i && k != j && self.agents[k].can_judge())
                .collect();
            if eligible.is_empty() {
                None
            } else {
                Some(eligible[self.rng.gen_range(0..eligible.len())])
            }
        }
    }

    /// Plays one encounter between `i` and `j` and judges both parties.
    ///
    /// Both judgments are made from the pre-encounter reputations and written
    /// together. Learners record their play transition (reward blended with
    /// introspection) and, when judging, one zero-reward transition per party.
    pub fn run_encounter(&mut self, i: usize, j: usize) -> Result<EncounterOutcome> {
        let n = self.agents.len();
        if i == j {
            return Err(Error::SelfEncounter(i));
        }
        if i >= n || j >= n {
            return Err(Error::invalid("agent index", format!("population has {n} agents")));
        }
        let (rep_i, rep_j) = (self.agents[i].reputation, self.agents[j].reputation);
        let act_i = self.act(i, rep_i, rep_j);
        let act_j = self.act(j, rep_j, rep_i);
        let game = self.config.payoff;
        let pay_i = payoff(act_i, act_j, &game);
        let pay_j = payoff(act_j, act_i, &game);

        self.record_play(i, PlayState::new(rep_i, rep_j), act_i, pay_i);
        self.record_play(j, PlayState::new(rep_j, rep_i), act_j, pay_j);

        let (judged_i, judged_j, judge) = match self.config.judging {
            Judging::Centralized => {
                let norm = self.config.norm;
                (Some(norm.judge(act_i, rep_j)), Some(norm.judge(act_j, rep_i)), None)
            }
            Judging::Decentralized => match self.draw_judge(i, j) {
                Some(k) => {
                    let a = self.judge(k, act_i, rep_j);
                    let b = self.judge(k, act_j, rep_i);
                    (Some(a), Some(b), Some(k))
                }
                None => (None, None, None),
            },
        };
        let chi = self.config.chi;
        if let Some(r) = judged_i {
            self.agents[i].reputation = assign_with_error(r, chi, &mut self.rng);
        }
        if let Some(r) = judged_j {
            self.agents[j].reputation = assign_with_error(r, chi, &mut self.rng);
        }
        Ok(EncounterOutcome {
            actions: (act_i, act_j),
            payoffs: (pay_i, pay_j),
            judge,
        })
    }

    /// Draws every reputation uniformly at random.
    pub fn randomize_reputations(&mut self) {
        for agent in &mut self.agents {
            agent.reputation = Reputation::from_bit(self.rng.gen_range(0..2u8));
        }
    }

    /// Runs K encounters starting from the current reputations, then lets
    /// every learner learn from its buffer.
    pub fn play_episode(&mut self) -> EpisodeRecord {
        let n = self.agents.len();
        let k = self.config.encounters_per_episode;
        let mut total = 0.0;
        let mut learner_total = 0.0;
        let mut learner_plays = 0usize;
        for _ in 0..k {
            let i = self.rng.gen_range(0..n);
            let mut j = self.rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let out = self.run_encounter(i, j).expect("distinct in-range pair");
            total += out.payoffs.0 + out.payoffs.1;
            for (idx, p) in [(i, out.payoffs.0), (j, out.payoffs.1)] {
                if self.agents[idx].is_learner() {
                    learner_total += p;
                    learner_plays += 1;
                }
            }
        }

        let learner = self.config.learner;
        for agent in &mut self.agents {
            if let AgentKind::Learner { q, buffer } = &mut agent.kind {
                learn_episode(q, buffer, &learner);
            }
        }

        let scale = self.config.payoff.mutual_cooperation();
        let mean_reward = total / (2 * k) as f64;
        let raw = mean_reward / scale;
        debug_assert!((-1e-9..=1.0 + 1e-9).contains(&raw), "coop level {raw} outside [0, 1]");
        let record = EpisodeRecord {
            episode: self.episode,
            mean_reward,
            coop_level: raw.clamp(0.0, 1.0),
            learner_coop_level: (learner_plays > 0).then(|| learner_total / learner_plays as f64 / scale),
            census: self.census(),
        };
        self.episode += 1;
        record
    }

    /// One full episode: fresh random reputations, K encounters, learning.
    pub fn run_episode(&mut self) -> EpisodeRecord {
        self.randomize_reputations();
        self.play_episode()
    }

    pub fn final_tables(&self) -> Vec<QTable> {
        self.learner_tables().cloned().collect()
    }
}

/// Summarizes a finished record stream.
pub fn summarize(config: &SimConfig, records: &[EpisodeRecord], final_census: PolicyCensus) -> RunSummary {
    let window_len = config.window_len().min(records.len());
    let tail = &records[records.len() - window_len..];
    let mean_of = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
    RunSummary {
        config: config.clone(),
        episodes: records.len(),
        window_len,
        coop_final: mean_of(tail.iter().map(|r| r.coop_level).collect()),
        learner_coop_final: mean_of(tail.iter().filter_map(|r| r.learner_coop_level).collect()),
        final_census,
    }
}

/// Runs `config.episodes` episodes on one stream seeded from `config.rng_seed`.
pub fn run_simulation(config: &SimConfig) -> Result<RunOutput> {
    run_simulation_with(config, |_| {})
}

/// As [`run_simulation`], calling `observe` after each episode.
pub fn run_simulation_with(config: &SimConfig, mut observe: impl FnMut(&EpisodeRecord)) -> Result<RunOutput> {
    let mut sim = Simulation::new(config.clone())?;
    let mut records = Vec::with_capacity(config.episodes);
    for _ in 0..config.episodes {
        let record = sim.run_episode();
        observe(&record);
        records.push(record);
    }
    let summary = summarize(config, &records, sim.census());
    Ok(RunOutput {
        records,
        summary,
        final_tables: sim.final_tables(),
    })
}

