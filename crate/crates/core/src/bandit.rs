//! Heuristic selection over the eight-arm pool.

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::neighborhoods::POOL_SIZE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SelectorKind {
    Random,
    EpsilonGreedy,
    Thompson,
    Ucb1,
}

impl SelectorKind {
    pub const ALL: [SelectorKind; 4] = [Self::Thompson, Self::Ucb1, Self::EpsilonGreedy, Self::Random];

    /// Algorithm label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            Self::Random => "HHASA",
            Self::EpsilonGreedy => "HHASA_EG",
            Self::Thompson => "HHASA_TS",
            Self::Ucb1 => "HHASA_UCB1",
        }
    }
}

impl std::str::FromStr for SelectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" | "hhasa" => Ok(Self::Random),
            "eg" | "epsilon" | "epsilon-greedy" | "epsilon_greedy" | "hhasa_eg" => Ok(Self::EpsilonGreedy),
            "ts" | "thompson" | "hhasa_ts" => Ok(Self::Thompson),
            "ucb" | "ucb1" | "hhasa_ucb1" => Ok(Self::Ucb1),
            other => Err(format!("unknown selector `{other}` (expected random, eg, ts or ucb1)")),
        }
    }
}

/// Form of the UCB1 exploration bonus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum UcbBonus {
    /// `sqrt(2 ln k) / S_i`
    #[default]
    Printed,
    /// `sqrt(2 ln k / S_i)`
    Textbook,
}

/// Per-epoch bandit counters.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BanditState {
    pub rewards: [f64; POOL_SIZE],
    pub penalties: [u64; POOL_SIZE],
    pub selections: [u64; POOL_SIZE],
    pub k: u64,
}

impl BanditState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn reset_epoch(&mut self) {
        *self = Self::default();
    }

    /// Adds `reward` to the arm on improvement, otherwise one penalty.
    /// Advances `k` either way.
    pub fn record_outcome(&mut self, arm: usize, improved: bool, reward: f64) {
        if improved {
            self.rewards[arm] += reward;
        } else {
            self.penalties[arm] += 1;
        }
        self.k += 1;
    }
}

fn argmax_random_ties<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    let best = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..values.len()).filter(|&i| values[i] == best).collect();
    ties[rng.random_range(0..ties.len())]
}

fn argmax_low_ties(values: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

/// Explores with probability `epsilon`, otherwise exploits the arm with the
/// highest accumulated reward.
pub fn select_epsilon_greedy<R: Rng + ?Sized>(state: &BanditState, epsilon: f64, rng: &mut R) -> usize {
    if rng.random::<f64>() < epsilon {
        select_random(rng)
    } else {
        argmax_random_ties(&state.rewards, rng)
    }
}

/// Draws `Beta(R_i + 1, P_i + 1)` per arm and returns the argmax.
pub fn select_thompson<R: Rng + ?Sized>(state: &BanditState, rng: &mut R) -> usize {
    let theta: Vec<f64> = (0..POOL_SIZE)
        .map(|i| {
            Beta::new(state.rewards[i] + 1.0, state.penalties[i] as f64 + 1.0)
                .expect("shape parameters are at least 1")
                .sample(rng)
        })
        .collect();
    argmax_random_ties(&theta, rng)
}

/// UCB1 selection for iteration `k` (1-based). The first `POOL_SIZE`
/// iterations play each arm once in order. Increments the chosen arm's
/// selection count.
pub fn select_ucb1(state: &mut BanditState, k: u64, bonus: UcbBonus) -> usize {
    assert!(k >= 1, "UCB1 iteration is 1-based");
    let arm = if k as usize <= POOL_SIZE {
        k as usize - 1
    } else {
        let ln_k = (k as f64).ln();
        let phi: Vec<f64> = (0..POOL_SIZE)
            .map(|i| {
                let s = state.selections[i].max(1) as f64;
                let explore = match bonus {
                    UcbBonus::Printed => (2.0 * ln_k).sqrt() / s,
                    UcbBonus::Textbook => (2.0 * ln_k / s).sqrt(),
                };
                state.rewards[i] / s + explore
            })
            .collect();
        argmax_low_ties(&phi)
    };
    state.selections[arm] += 1;
    arm
}

pub fn select_random<R: Rng + ?Sized>(rng: &mut R) -> usize {
    rng.random_range(0..POOL_SIZE)
}
