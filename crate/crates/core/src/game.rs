//! Prisoner's Dilemma payoffs, the 4-bit action-rule and social-norm codecs,
//! and noisy reputation assignment.
//!
//! Both codecs share one bit convention: the four input combinations are
//! ordered `(0,0), (0,1), (1,0), (1,1)` and mapped to bits 3, 2, 1, 0. So the
//! bit for inputs `(x, y)` sits at position `3 - 2x - y`. Everything else in
//! the crate goes through [`ActionRule::action`] and [`SocialNorm::judge`]
//! rather than doing its own bit arithmetic.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary reputation label. Neither value carries meaning on its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Reputation {
    Zero = 0,
    One = 1,
}

impl Reputation {
    pub const ALL: [Reputation; 2] = [Reputation::Zero, Reputation::One];

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 1 {
            Reputation::One
        } else {
            Reputation::Zero
        }
    }

    pub fn bit(self) -> u8 {
        self as u8
    }

    pub fn flipped(self) -> Self {
        match self {
            Reputation::Zero => Reputation::One,
            Reputation::One => Reputation::Zero,
        }
    }
}

/// `D = 0`, `C = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    Defect = 0,
    Cooperate = 1,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Defect, Action::Cooperate];

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 1 {
            Action::Cooperate
        } else {
            Action::Defect
        }
    }

    pub fn bit(self) -> u8 {
        self as u8
    }

    pub fn is_cooperate(self) -> bool {
        self == Action::Cooperate
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Action::Defect => "D",
            Action::Cooperate => "C",
        })
    }
}

/// Donation-game parameters: a cooperator pays `cost` so its opponent gains `benefit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffParams {
    pub benefit: f64,
    pub cost: f64,
}

impl PayoffParams {
    pub fn new(benefit: f64, cost: f64) -> Result<Self> {
        let params = PayoffParams { benefit, cost };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cost.is_finite() && self.benefit.is_finite()) {
            return Err(Error::invalid("payoff", "b and c must be finite"));
        }
        if !(self.cost > 0.0) {
            return Err(Error::invalid("c", format!("must be > 0, got {}", self.cost)));
        }
        if !(self.benefit > self.cost) {
            return Err(Error::invalid(
                "b",
                format!("must exceed c = {}, got {}", self.cost, self.benefit),
            ));
        }
        Ok(())
    }

    /// Payoff of mutual cooperation, `b - c`.
    pub fn mutual_cooperation(&self) -> f64 {
        self.benefit - self.cost
    }
}

impl Default for PayoffParams {
    fn default() -> Self {
        PayoffParams {
            benefit: 5.0,
            cost: 1.0,
        }
    }
}

/// Payoff to the player taking `own` against an opponent taking `opp`.
///
/// `(D,D) -> 0`, `(D,C) -> b`, `(C,D) -> -c`, `(C,C) -> b - c`.
pub fn payoff(own: Action, opp: Action, params: &PayoffParams) -> f64 {
    let mut value = 0.0;
    if own.is_cooperate() {
        value -= params.cost;
    }
    if opp.is_cooperate() {
        value += params.benefit;
    }
    value
}

#[inline]
fn bit_position(x: u8, y: u8) -> u8 {
    3 - 2 * x - y
}

macro_rules! four_bit_code {
    ($name:ident, $what:literal) => {
        impl $name {
            pub const COUNT: usize = 16;

            pub fn new(code: u8) -> Result<Self> {
                if code < 16 {
                    Ok($name(code))
                } else {
                    Err(Error::invalid($what, format!("code must be in 0..=15, got {code}")))
                }
            }

            pub fn code(self) -> u8 {
                self.0
            }

            /// All 16 codes in ascending order.
            pub fn all() -> impl Iterator<Item = Self> {
                (0..16u8).map($name)
            }

            /// Bits 3, 2, 1, 0 in that order.
            pub fn bits(self) -> [u8; 4] {
                [
                    (self.0 >> 3) & 1,
                    (self.0 >> 2) & 1,
                    (self.0 >> 1) & 1,
                    self.0 & 1,
                ]
            }

            pub fn from_bits(bits: [u8; 4]) -> Self {
                $name(bits.iter().fold(0u8, |acc, b| (acc << 1) | (b & 1)))
            }

            /// The complementary code (every output bit flipped).
            pub fn complement(self) -> Self {
                $name(self.0 ^ 0b1111)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{} ({:04b})", self.0, self.0)
            }
        }

        impl TryFrom<u8> for $name {
            type Error = Error;

            fn try_from(code: u8) -> Result<Self> {
                $name::new(code)
            }
        }
    };
}

/// Maps (own reputation, opponent reputation) to an action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ActionRule(u8);

four_bit_code!(ActionRule, "action rule");

impl ActionRule {
    pub const ALL_DEFECT: ActionRule = ActionRule(0);
    /// Cooperate exactly with reputation-1 opponents.
    pub const DISCRIMINATOR: ActionRule = ActionRule(5);
    /// Mirror of [`ActionRule::DISCRIMINATOR`]: cooperate exactly with reputation-0 opponents.
    pub const ANTI_DISCRIMINATOR: ActionRule = ActionRule(10);
    pub const ALL_COOPERATE: ActionRule = ActionRule(15);

    pub fn action(self, own: Reputation, opp: Reputation) -> Action {
        Action::from_bit(self.0 >> bit_position(own.bit(), opp.bit()))
    }
}

impl From<ActionRule> for u8 {
    fn from(rule: ActionRule) -> u8 {
        rule.0
    }
}

/// Maps (focal action, opponent reputation) to the focal agent's new reputation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct SocialNorm(u8);

four_bit_code!(SocialNorm, "social norm");

impl SocialNorm {
    pub const ALL_BAD: SocialNorm = SocialNorm(0);
    /// Reputation tracks the last action only.
    pub const IMAGE_SCORING: SocialNorm = SocialNorm(3);
    pub const STERN_JUDGING: SocialNorm = SocialNorm(9);
    pub const SIMPLE_STANDING: SocialNorm = SocialNorm(11);
    pub const ALL_GOOD: SocialNorm = SocialNorm(15);

    /// Noise-free judgment of a focal agent that took `action` against an
    /// opponent holding `opp`.
    pub fn judge(self, action: Action, opp: Reputation) -> Reputation {
        Reputation::from_bit(self.0 >> bit_position(action.bit(), opp.bit()))
    }
}

impl From<SocialNorm> for u8 {
    fn from(norm: SocialNorm) -> u8 {
        norm.0
    }
}

/// Free-function form of [`ActionRule::action`].
pub fn rule_action(rule: ActionRule, own: Reputation, opp: Reputation) -> Action {
    rule.action(own, opp)
}

/// Free-function form of [`SocialNorm::judge`].
pub fn norm_judgment(norm: SocialNorm, focal_action: Action, opp: Reputation) -> Reputation {
    norm.judge(focal_action, opp)
}

/// Assignment error rate, validated to lie in `[0, 0.5)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ErrorRate(f64);

impl ErrorRate {
    pub const ZERO: ErrorRate = ErrorRate(0.0);

    pub fn new(chi: f64) -> Result<Self> {
        if (0.0..0.5).contains(&chi) {
            Ok(ErrorRate(chi))
        } else {
            Err(Error::invalid("chi", format!("must be in [0, 0.5), got {chi}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ErrorRate {
    type Error = Error;

    fn try_from(chi: f64) -> Result<Self> {
        ErrorRate::new(chi)
    }
}

impl From<ErrorRate> for f64 {
    fn from(chi: ErrorRate) -> f64 {
        chi.0
    }
}

/// Writes `intended`, flipped with probability `chi`. Always consumes exactly
/// one uniform draw from `rng`.
pub fn assign_with_error<R: Rng + ?Sized>(intended: Reputation, chi: ErrorRate, rng: &mut R) -> Reputation {
    let u: f64 = rng.gen();
    if u < chi.0 {
        intended.flipped()
    } else {
        intended
    }
}
