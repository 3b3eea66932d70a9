//! Tabular Q-learning agents playing the randomly matched Prisoner's Dilemma
//! with binary public reputations.
//!
//! Reputations are assigned either by one central social norm or by randomly
//! drawn third-party judges that learn their own norm. Two mechanisms can be
//! switched on to steer learners toward cooperation: fixed seeded agents
//! playing a reciprocal rule, and an introspective reward from a simulated
//! encounter with oneself. [`egt`] holds the analytical stability baseline
//! for monomorphic populations.

pub mod analysis;
pub mod egt;
pub mod error;
pub mod experiment;
pub mod game;
pub mod learning;
pub mod sim;

pub use analysis::{aggregate, extract_norm, extract_rule, PolicyCensus, SweepPoint};
pub use error::{Error, Result};
pub use game::{
    assign_with_error, norm_judgment, payoff, rule_action, Action, ActionRule, ErrorRate, PayoffParams, Reputation,
    SocialNorm,
};
pub use learning::{
    introspective_reward, learn_episode, q_update, select_action, JudgeState, LearnerParams, PlayState, QTable, State,
    TrajectoryBuffer, Transition,
};
pub use sim::{run_simulation, EpisodeRecord, Judging, RunOutput, RunSummary, SeedJudging, SimConfig, Simulation};
