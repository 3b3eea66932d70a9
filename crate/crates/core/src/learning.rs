//! Tabular Q-learning: epsilon-greedy selection, per-episode trajectory
//! buffers, batch updates and the self-encounter (introspective) reward.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{payoff, Action, PayoffParams, Reputation};

/// What an agent sees before acting: its own reputation and its opponent's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlayState {
    pub own: Reputation,
    pub opp: Reputation,
}

impl PlayState {
    pub fn new(own: Reputation, opp: Reputation) -> Self {
        PlayState { own, opp }
    }

    pub fn all() -> impl Iterator<Item = PlayState> {
        Reputation::ALL
            .into_iter()
            .flat_map(|own| Reputation::ALL.map(move |opp| PlayState { own, opp }))
    }

    /// 0..4 in the same order as the rule bits 3..0.
    pub fn index(self) -> usize {
        2 * self.own.bit() as usize + self.opp.bit() as usize
    }
}

/// What a judge sees: the judged party's action and that party's opponent's reputation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct JudgeState {
    pub action: Action,
    pub opp: Reputation,
}

impl JudgeState {
    pub fn new(action: Action, opp: Reputation) -> Self {
        JudgeState { action, opp }
    }

    pub fn all() -> impl Iterator<Item = JudgeState> {
        Action::ALL
            .into_iter()
            .flat_map(|action| Reputation::ALL.map(move |opp| JudgeState { action, opp }))
    }

    pub fn index(self) -> usize {
        2 * self.action.bit() as usize + self.opp.bit() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum State {
    Play(PlayState),
    Judge(JudgeState),
}

impl From<PlayState> for State {
    fn from(s: PlayState) -> Self {
        State::Play(s)
    }
}

impl From<JudgeState> for State {
    fn from(s: JudgeState) -> Self {
        State::Judge(s)
    }
}

/// Two-valued choice taken in a state: a play action or a judged reputation.
/// Both are encoded as bits, so the table stores them the same way.
pub type Choice = u8;

/// Per-agent state-action values. Play states always exist; judge states only
/// when the table is built with [`QTable::with_judging`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    play: [[f64; 2]; 4],
    judge: Option<[[f64; 2]; 4]>,
}

impl QTable {
    /// Zero-initialized play-only table (8 entries).
    pub fn new() -> Self {
        QTable {
            play: [[0.0; 2]; 4],
            judge: None,
        }
    }

    /// Zero-initialized table with judge states (16 entries).
    pub fn with_judging() -> Self {
        QTable {
            play: [[0.0; 2]; 4],
            judge: Some([[0.0; 2]; 4]),
        }
    }

    pub fn has_judge_states(&self) -> bool {
        self.judge.is_some()
    }

    pub fn len(&self) -> usize {
        if self.judge.is_some() {
            16
        } else {
            8
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn row(&self, state: State) -> &[f64; 2] {
        match state {
            State::Play(s) => &self.play[s.index()],
            State::Judge(s) => &self.judge.as_ref().expect("table has no judge states")[s.index()],
        }
    }

    fn row_mut(&mut self, state: State) -> &mut [f64; 2] {
        match state {
            State::Play(s) => &mut self.play[s.index()],
            State::Judge(s) => &mut self.judge.as_mut().expect("table has no judge states")[s.index()],
        }
    }

    /// Both values of `state`, indexed by choice.
    ///
    /// # Panics
    /// If `state` is a judge state and the table has none.
    pub fn values(&self, state: impl Into<State>) -> [f64; 2] {
        *self.row(state.into())
    }

    pub fn get(&self, state: impl Into<State>, choice: Choice) -> f64 {
        self.row(state.into())[choice as usize]
    }

    pub fn set(&mut self, state: impl Into<State>, choice: Choice, value: f64) {
        self.row_mut(state.into())[choice as usize] = value;
    }

    pub fn max_value(&self, state: impl Into<State>) -> f64 {
        let [v0, v1] = self.values(state);
        v0.max(v1)
    }

    /// Argmax with ties going to choice 0. The flag is true on an exact tie.
    pub fn greedy(&self, state: impl Into<State>) -> (Choice, bool) {
        let [v0, v1] = self.values(state);
        if v1 > v0 {
            (1, false)
        } else {
            (0, v1 == v0)
        }
    }

    pub fn contains(&self, state: State) -> bool {
        match state {
            State::Play(_) => true,
            State::Judge(_) => self.judge.is_some(),
        }
    }

    pub fn is_finite(&self) -> bool {
        let judge = self.judge.iter().flatten().flatten();
        self.play.iter().flatten().chain(judge).all(|v| v.is_finite())
    }

    /// Every entry in a fixed order: play states first, then judge states.
    pub fn entries(&self) -> Vec<(State, Choice, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for s in PlayState::all() {
            for c in 0..2u8 {
                out.push((State::Play(s), c, self.get(s, c)));
            }
        }
        if self.judge.is_some() {
            for s in JudgeState::all() {
                for c in 0..2u8 {
                    out.push((State::Judge(s), c, self.get(s, c)));
                }
            }
        }
        out
    }
}

impl Default for QTable {
    fn default() -> Self {
        QTable::new()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: State,
    pub choice: Choice,
    pub reward: f64,
    /// `None` marks the agent's last transition of the episode.
    pub next_state: Option<State>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerParams {
    /// Learning rate, in (0, 1].
    pub beta: f64,
    /// Discount, in [0, 1).
    pub gamma: f64,
    /// Exploration probability, in [0, 1].
    pub epsilon: f64,
    /// Introspection level, in [0, 1]: the weight of the self-encounter payoff
    /// in the training reward. 0 trains on the extrinsic payoff alone.
    pub alpha: f64,
}

impl Default for LearnerParams {
    fn default() -> Self {
        LearnerParams {
            beta: 1e-2,
            gamma: 0.99,
            epsilon: 0.1,
            alpha: 0.0,
        }
    }
}

impl LearnerParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::invalid("beta", format!("must be in (0, 1], got {}", self.beta)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::invalid("gamma", format!("must be in [0, 1), got {}", self.gamma)));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::invalid("epsilon", format!("must be in [0, 1], got {}", self.epsilon)));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::invalid("alpha", format!("must be in [0, 1], got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Epsilon-greedy choice. One uniform draw decides between exploring and
/// exploiting; exploring takes a second draw for the uniform choice, which can
/// land on the greedy choice.
pub fn select_action<R: Rng + ?Sized>(q: &QTable, state: impl Into<State>, epsilon: f64, rng: &mut R) -> Choice {
    let state = state.into();
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..2u8)
    } else {
        q.greedy(state).0
    }
}

/// One temporal-difference step on `t.state, t.choice`.
pub fn q_update(q: &mut QTable, t: &Transition, beta: f64, gamma: f64) {
    let bootstrap = t.next_state.map_or(0.0, |s| q.max_value(s));
    let old = q.get(t.state, t.choice);
    q.set(t.state, t.choice, old + beta * (t.reward + gamma * bootstrap - old));
}

/// One agent's transitions for the current episode, in collection order.
///
/// Each pushed transition becomes the successor of the previous one, so the
/// last transition of the episode is the only one left without a next state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryBuffer {
    transitions: Vec<Transition>,
}

impl TrajectoryBuffer {
    pub fn new() -> Self {
        TrajectoryBuffer::default()
    }

    pub fn push(&mut self, state: impl Into<State>, choice: Choice, reward: f64) {
        let state = state.into();
        if let Some(prev) = self.transitions.last_mut() {
            prev.next_state = Some(state);
        }
        self.transitions.push(Transition {
            state,
            choice,
            reward,
            next_state: None,
        });
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
    }
}

impl From<Vec<Transition>> for TrajectoryBuffer {
    fn from(transitions: Vec<Transition>) -> Self {
        TrajectoryBuffer { transitions }
    }
}

/// Applies every buffered transition once, in order, then empties the buffer.
pub fn learn_episode(q: &mut QTable, buffer: &mut TrajectoryBuffer, params: &LearnerParams) {
    for t in &buffer.transitions {
        q_update(q, t, params.beta, params.gamma);
    }
    buffer.clear();
}

/// Blends the extrinsic payoff with the payoff of a simulated encounter
/// against an identical copy: `(1 - alpha) * extrinsic + alpha * self_payoff`.
///
/// Both copies act through [`select_action`] in the play state
/// `(own_rep, own_rep)` with the learner's live epsilon. Nothing outside the
/// RNG is touched. With `alpha == 0` no draws are taken and the extrinsic
/// payoff is returned as is.
pub fn introspective_reward<R: Rng + ?Sized>(
    extrinsic: f64,
    q: &QTable,
    own_rep: Reputation,
    learner: &LearnerParams,
    game: &PayoffParams,
    rng: &mut R,
) -> f64 {
    if learner.alpha == 0.0 {
        return extrinsic;
    }
    let mirror = PlayState::new(own_rep, own_rep);
    let focal = Action::from_bit(select_action(q, mirror, learner.epsilon, rng));
    let copy = Action::from_bit(select_action(q, mirror, learner.epsilon, rng));
    let intrinsic = payoff(focal, copy, game);
    (1.0 - learner.alpha) * extrinsic + learner.alpha * intrinsic
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use Reputation::{One, Zero};

    fn play(own: Reputation, opp: Reputation) -> PlayState {
        PlayState::new(own, opp)
    }

    #[test]
    fn table_sizes() {
        assert_eq!(QTable::new().len(), 8);
        assert_eq!(QTable::with_judging().len(), 16);
        assert_eq!(QTable::new().entries().len(), 8);
        assert_eq!(QTable::with_judging().entries().len(), 16);
        assert_eq!(PlayState::all().count(), 4);
        assert_eq!(JudgeState::all().count(), 4);
    }

    #[test]
    fn greedy_and_tie_break() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = play(Zero, One);
        let mut q = QTable::new();
        assert_eq!(select_action(&q, s, 0.0, &mut rng), 0);
        assert_eq!(q.greedy(s), (0, true));
        q.set(s, 0, 0.5);
        q.set(s, 1, 0.2);
        assert_eq!(select_action(&q, s, 0.0, &mut rng), 0);
        q.set(s, 1, 0.7);
        assert_eq!(select_action(&q, s, 0.0, &mut rng), 1);
    }

    #[test]
    fn exploration_frequency() {
        let s = play(One, One);
        let mut q = QTable::new();
        q.set(s, 0, -1.0);
        q.set(s, 1, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let ones: usize = (0..n).map(|_| select_action(&q, s, 0.1, &mut rng) as usize).sum();
        let freq = ones as f64 / n as f64;
        // 1 - eps + eps / 2
        assert!((freq - 0.95).abs() < 0.01, "{freq}");
    }

    #[test]
    fn update_arithmetic() {
        let s = play(One, One);
        let mut q = QTable::new();
        let t = Transition {
            state: s.into(),
            choice: 1,
            reward: 4.0,
            next_state: None,
        };
        q_update(&mut q, &t, 0.01, 0.99);
        assert_abs_diff_eq!(q.get(s, 1), 0.04, epsilon = 1e-15);

        let next = play(Zero, Zero);
        let mut q = QTable::new();
        q.set(s, 0, 1.0);
        q.set(next, 1, 1.0);
        let t = Transition {
            state: s.into(),
            choice: 0,
            reward: 0.0,
            next_state: Some(next.into()),
        };
        q_update(&mut q, &t, 0.01, 0.99);
        assert_abs_diff_eq!(q.get(s, 0), 0.9999, epsilon = 1e-15);
    }

    #[test]
    fn zero_step_leaves_table_alone() {
        let s = play(Zero, Zero);
        let mut q = QTable::new();
        q.set(s, 1, 0.3);
        let before = q.clone();
        let t = Transition {
            state: s.into(),
            choice: 1,
            reward: 100.0,
            next_state: Some(s.into()),
        };
        q_update(&mut q, &t, 0.0, 0.99);
        assert_eq!(q, before);
    }

    #[test]
    fn learn_episode_cases() {
        let params = LearnerParams::default();
        let s = play(One, Zero);

        let mut q = QTable::new();
        let mut empty = TrajectoryBuffer::new();
        learn_episode(&mut q, &mut empty, &params);
        assert_eq!(q, QTable::new());

        // two terminal transitions on the same pair: 0.04, then 0.04 + 0.01 * (4 - 0.04)
        let mut buf = TrajectoryBuffer::from(vec![
            Transition { state: s.into(), choice: 1, reward: 4.0, next_state: None };
            2
        ]);
        learn_episode(&mut q, &mut buf, &params);
        assert_abs_diff_eq!(q.get(s, 1), 0.0796, epsilon = 1e-15);
        assert!(buf.is_empty());
    }

    #[test]
    fn buffer_chains_next_states() {
        let mut buf = TrajectoryBuffer::new();
        let a = play(Zero, Zero);
        let j = JudgeState::new(Action::Cooperate, One);
        let b = play(One, Zero);
        buf.push(a, 0, 0.0);
        buf.push(j, 1, 0.0);
        buf.push(b, 1, -1.0);
        let ts = buf.transitions();
        assert_eq!(ts[0].next_state, Some(State::Judge(j)));
        assert_eq!(ts[1].next_state, Some(State::Play(b)));
        assert_eq!(ts[2].next_state, None);
    }

    #[test]
    fn judge_bootstrap_uses_judge_choices() {
        let mut q = QTable::with_judging();
        let j = JudgeState::new(Action::Defect, Zero);
        q.set(j, 1, 2.0);
        let s = play(Zero, Zero);
        let t = Transition {
            state: s.into(),
            choice: 0,
            reward: 0.0,
            next_state: Some(j.into()),
        };
        q_update(&mut q, &t, 0.5, 0.5);
        assert_abs_diff_eq!(q.get(s, 0), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn introspection_blend() {
        let game = PayoffParams::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);

        let plain = LearnerParams::default();
        assert_eq!(introspective_reward(5.0, &QTable::new(), One, &plain, &game, &mut rng), 5.0);

        // a greedy unconditional cooperator meets itself: (C, C)
        let mut coop = QTable::new();
        for s in PlayState::all() {
            coop.set(s, 1, 1.0);
        }
        let full = LearnerParams { alpha: 1.0, epsilon: 0.0, ..plain };
        assert_eq!(introspective_reward(-1.0, &coop, Zero, &full, &game, &mut rng), 4.0);

        // a defector meets itself: (D, D) contributes 0
        let mut defect = QTable::new();
        for s in PlayState::all() {
            defect.set(s, 0, 1.0);
        }
        let partial = LearnerParams { alpha: 0.4, epsilon: 0.0, ..plain };
        let r = introspective_reward(5.0, &defect, One, &partial, &game, &mut rng);
        assert_abs_diff_eq!(r, 3.0, epsilon = 1e-12);
    }

    #[test]
    fn params_validation() {
        assert!(LearnerParams::default().validate().is_ok());
        let base = LearnerParams::default();
        assert!(LearnerParams { beta: 0.0, ..base }.validate().is_err());
        assert!(LearnerParams { gamma: 1.0, ..base }.validate().is_err());
        assert!(LearnerParams { epsilon: 1.5, ..base }.validate().is_err());
        assert!(LearnerParams { alpha: -0.1, ..base }.validate().is_err());
    }
}
