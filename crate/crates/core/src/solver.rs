//! Simulated annealing driver with adaptive reheating and a bandit choosing
//! the perturbation heuristic at every inner iteration.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandit::{
    select_epsilon_greedy, select_random, select_thompson, select_ucb1, BanditState, SelectorKind, UcbBonus,
};
use crate::instance::{Instance, Node};
use crate::neighborhoods::{
    adjust_stations, generate, is_load_feasible, repair_load, AdjustParams, ClosenessFractions, CustomerQueue,
    HeuristicId, POOL_SIZE,
};
use crate::solution::{construct_initial, evaluate, to_solution_text, SolutionError, Tour};

/// Epochs in a row without a single evaluation after which a run gives up.
const MAX_IDLE_EPOCHS: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeltaMode {
    /// `f(candidate) - f(current)`
    Raw,
    /// The raw difference divided by `f(current)`.
    Relative,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue { key: String, value: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub alpha: f64,
    pub t0: f64,
    pub limit: u32,
    /// Inner iterations per epoch, as a multiple of the customer count.
    pub iters_per_epoch: f64,
    /// Evaluation budget, as a multiple of the customer count.
    pub max_acc: f64,
    /// Extra factor on the evaluation budget, for short runs.
    pub budget_scale: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub epsilon: f64,
    pub memory: f64,
    pub p_m: f64,
    pub p_e: f64,
    pub r1: f64,
    pub r2: f64,
    pub selector: SelectorKind,
    pub seed: u64,
    pub delta_mode: DeltaMode,
    pub ucb_bonus: UcbBonus,
    /// Reward credited to an arm on an improving move.
    pub reward: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 0.99,
            t0: 1.0,
            limit: 20,
            iters_per_epoch: 40.0,
            max_acc: 25_000.0,
            budget_scale: 1.0,
            x_min: 0.0,
            x_max: 90.0,
            y_min: 0.05,
            y_max: 1.0,
            epsilon: 0.1,
            memory: 0.5,
            p_m: 0.60,
            p_e: 0.40,
            r1: 0.10,
            r2: 1.0,
            selector: SelectorKind::Thompson,
            seed: 0,
            delta_mode: DeltaMode::Relative,
            ucb_bonus: UcbBonus::Printed,
            reward: 1.0,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| bad(key, value, "not a finite number"))
}

fn bad(key: &str, value: &str, reason: &str) -> ConfigError {
    ConfigError::BadValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.to_string(),
    }
}

impl SolverConfig {
    pub fn iters_for(&self, n_customers: usize) -> u64 {
        ((self.iters_per_epoch * n_customers as f64).round() as u64).max(1)
    }

    pub fn max_acc_for(&self, n_customers: usize) -> u64 {
        ((self.max_acc * self.budget_scale * n_customers as f64).round() as u64).max(1)
    }

    pub fn fractions(&self) -> ClosenessFractions {
        ClosenessFractions { r1: self.r1, r2: self.r2 }
    }

    pub fn adjust_params(&self) -> AdjustParams {
        AdjustParams {
            memory: self.memory,
            p_move: self.p_m,
            p_eliminate: self.p_e,
        }
    }

    /// Sets one parameter from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let key = key.trim().to_ascii_lowercase();
        let key = key.as_str();
        match key {
            "alpha" => self.alpha = parse_f64(key, value)?,
            "t0" => self.t0 = parse_f64(key, value)?,
            "limit" => self.limit = value.parse().map_err(|_| bad(key, value, "not a count"))?,
            "iters_per_epoch" => self.iters_per_epoch = parse_f64(key, value)?,
            "max_acc" => self.max_acc = parse_f64(key, value)?,
            "budget_scale" => self.budget_scale = parse_f64(key, value)?,
            "x_min" => self.x_min = parse_f64(key, value)?,
            "x_max" => self.x_max = parse_f64(key, value)?,
            "y_min" => self.y_min = parse_f64(key, value)?,
            "y_max" => self.y_max = parse_f64(key, value)?,
            "epsilon" => self.epsilon = parse_f64(key, value)?,
            "memory" => self.memory = parse_f64(key, value)?,
            "p_m" => self.p_m = parse_f64(key, value)?,
            "p_e" => self.p_e = parse_f64(key, value)?,
            "r1" => self.r1 = parse_f64(key, value)?,
            "r2" => self.r2 = parse_f64(key, value)?,
            "reward" => self.reward = parse_f64(key, value)?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key, value, "not an unsigned integer"))?,
            "selector" => self.selector = value.parse().map_err(|e: String| bad(key, value, &e))?,
            "delta_mode" => {
                self.delta_mode = match value.to_ascii_lowercase().as_str() {
                    "raw" => DeltaMode::Raw,
                    "relative" => DeltaMode::Relative,
                    _ => return Err(bad(key, value, "expected raw or relative")),
                }
            }
            "ucb_bonus" => {
                self.ucb_bonus = match value.to_ascii_lowercase().as_str() {
                    "printed" => UcbBonus::Printed,
                    "textbook" => UcbBonus::Textbook,
                    _ => return Err(bad(key, value, "expected printed or textbook")),
                }
            }
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`. Blank lines and `#`
    /// comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                text: raw.to_string(),
            })?;
            self.set(k, v)?;
        }
        self.check()
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let prob = |key: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(bad(key, &v.to_string(), "must lie in [0, 1]"))
            }
        };
        let positive = |key: &str, v: f64| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(bad(key, &v.to_string(), "must be positive"))
            }
        };
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(bad("alpha", &self.alpha.to_string(), "must lie in (0, 1]"));
        }
        positive("t0", self.t0)?;
        positive("iters_per_epoch", self.iters_per_epoch)?;
        positive("max_acc", self.max_acc)?;
        positive("budget_scale", self.budget_scale)?;
        positive("r1", self.r1)?;
        positive("r2", self.r2)?;
        prob("r1", self.r1)?;
        prob("r2", self.r2)?;
        prob("epsilon", self.epsilon)?;
        prob("memory", self.memory)?;
        prob("p_m", self.p_m)?;
        prob("p_e", self.p_e)?;
        if self.p_m + self.p_e <= 0.0 {
            return Err(bad("p_m", &self.p_m.to_string(), "p_m + p_e must be positive"));
        }
        if self.y_min > self.y_max {
            return Err(bad("y_min", &self.y_min.to_string(), "must not exceed y_max"));
        }
        Ok(())
    }
}

/// Metropolis rule: improving or equal moves always pass, worse ones with
/// probability `exp(-delta / t)`.
pub fn metropolis_accept<R: Rng + ?Sized>(delta: f64, t: f64, rng: &mut R) -> bool {
    debug_assert!(t > 0.0, "temperature must be positive");
    delta <= 0.0 || rng.random::<f64>() < (-delta / t).exp()
}

/// Temperature added on a reheat. Linear in the share of budget spent,
/// from `y_min` at `x_min` percent to `y_max` at `x_max` percent.
pub fn reheat_beta(acc: u64, max_acc: u64, cfg: &SolverConfig) -> f64 {
    if cfg.x_max == cfg.x_min {
        return cfg.y_max;
    }
    let pct = 100.0 * acc as f64 / max_acc.max(1) as f64;
    let m = (cfg.y_max - cfg.y_min) / (cfg.x_max - cfg.x_min);
    (m * pct + (cfg.y_max - m * cfg.x_max)).clamp(cfg.y_min, cfg.y_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochTrace {
    /// Temperature the epoch ran at.
    pub temperature: f64,
    pub best: f64,
    pub current: f64,
    /// Non-improving epoch counter after this epoch.
    pub h_up: u32,
    pub reheated: bool,
    pub evaluations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditTrace {
    pub selections: [u64; POOL_SIZE],
    pub rewards: [f64; POOL_SIZE],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub selector: String,
    pub seed: u64,
    pub best_fitness: f64,
    pub initial_fitness: f64,
    pub evaluations: u64,
    pub max_evaluations: u64,
    pub wall_ms: u64,
    /// Best tour in the solution text format.
    pub best_tour: String,
    /// Best tour in internal node numbering.
    pub best_seq: Vec<Node>,
    pub epoch_trace: Vec<EpochTrace>,
    pub bandit_trace: Vec<BanditTrace>,
}

impl RunRecord {
    /// Copy with the timing field cleared, for comparing runs.
    pub fn without_timing(&self) -> Self {
        Self { wall_ms: 0, ..self.clone() }
    }

    pub fn best(&self) -> Tour {
        Tour::new(self.best_seq.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serialises")
    }
}

#[derive(Debug, Clone)]
pub struct SolverState {
    pub current: Tour,
    pub best: Tour,
    pub temperature: f64,
    pub h_up: u32,
    pub acc: u64,
    pub bandit: BanditState,
    pub queue: CustomerQueue,
}

impl SolverState {
    fn current_fitness(&self) -> f64 {
        self.current.fitness().expect("current is evaluated")
    }

    pub fn best_fitness(&self) -> f64 {
        self.best.fitness().expect("best is evaluated")
    }
}

/// What one epoch did.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochOutcome {
    pub improved_best: bool,
    pub evaluations: u64,
    pub selections: [u64; POOL_SIZE],
    pub arms: Vec<usize>,
}

fn choose_arm<R: Rng + ?Sized>(state: &mut SolverState, cfg: &SolverConfig, rng: &mut R) -> usize {
    match cfg.selector {
        SelectorKind::Random => select_random(rng),
        SelectorKind::EpsilonGreedy => select_epsilon_greedy(&state.bandit, cfg.epsilon, rng),
        SelectorKind::Thompson => select_thompson(&state.bandit, rng),
        SelectorKind::Ucb1 => {
            let k = state.bandit.k + 1;
            select_ucb1(&mut state.bandit, k, cfg.ucb_bonus)
        }
    }
}

/// One local-search block at the current temperature: up to `iters`
/// inner iterations, stopping early once `acc` reaches `max_acc`.
pub fn local_search_epoch<R: Rng + ?Sized>(
    state: &mut SolverState,
    inst: &Instance,
    cfg: &SolverConfig,
    iters: u64,
    max_acc: u64,
    rng: &mut R,
) -> EpochOutcome {
    let mut out = EpochOutcome {
        improved_best: false,
        evaluations: 0,
        selections: [0; POOL_SIZE],
        arms: Vec::with_capacity(iters as usize),
    };
    let fractions = cfg.fractions();
    let adjust = cfg.adjust_params();
    for _ in 0..iters {
        if state.acc >= max_acc {
            break;
        }
        let arm = choose_arm(state, cfg, rng);
        out.selections[arm] += 1;
        out.arms.push(arm);
        let h = HeuristicId::ALL[arm];

        let mut cand = generate(&state.current, h, &mut state.queue, inst, fractions, rng);
        if !is_load_feasible(&cand, inst) {
            match repair_load(&cand, inst) {
                Ok(t) => cand = t,
                Err(_) => {
                    state.bandit.record_outcome(arm, false, cfg.reward);
                    continue;
                }
            }
        }
        let mut cand = match adjust_stations(&cand, inst, adjust, rng) {
            Ok(t) => t,
            Err(_) => {
                state.bandit.record_outcome(arm, false, cfg.reward);
                continue;
            }
        };
        debug_assert!(crate::solution::validate(&cand, inst).is_empty());
        let f_cand = evaluate(&mut cand, inst).expect("moves keep the tour well formed");
        state.acc += 1;
        out.evaluations += 1;

        let f_cur = state.current_fitness();
        let mut delta = f_cand - f_cur;
        if cfg.delta_mode == DeltaMode::Relative {
            delta /= f_cur;
        }
        let improved = delta < 0.0;
        if f_cand < state.best_fitness() {
            state.best = cand.clone();
            out.improved_best = true;
        }
        if metropolis_accept(delta, state.temperature, rng) {
            state.current = cand;
        }
        state.bandit.record_outcome(arm, improved, cfg.reward);
    }
    out
}

/// Runs the full search on `inst` with the seed in `cfg`.
pub fn run(inst: &Instance, cfg: &SolverConfig) -> Result<RunRecord, SolutionError> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_c = inst.n_customers();
    let iters = cfg.iters_for(n_c);
    let max_acc = cfg.max_acc_for(n_c);

    let mut initial = construct_initial(inst, &mut rng)?;
    let initial_fitness = evaluate(&mut initial, inst)?;
    let mut state = SolverState {
        best: initial.clone(),
        current: initial,
        temperature: cfg.t0,
        h_up: 0,
        acc: 0,
        bandit: BanditState::new(),
        queue: CustomerQueue::new(),
    };

    let mut epoch_trace = Vec::new();
    let mut bandit_trace = Vec::new();
    let mut idle = 0;
    while state.acc < max_acc && idle < MAX_IDLE_EPOCHS {
        state.bandit.reset_epoch();
        let before = state.best_fitness();
        let temperature = state.temperature;
        let outcome = local_search_epoch(&mut state, inst, cfg, iters, max_acc, &mut rng);
        assert!(state.best_fitness() <= before, "best fitness increased");
        idle = if outcome.evaluations == 0 { idle + 1 } else { 0 };

        if outcome.improved_best {
            state.h_up = 0;
        } else {
            state.h_up += 1;
        }
        let reheated = state.h_up >= cfg.limit;
        if reheated {
            state.temperature += reheat_beta(state.acc, max_acc, cfg);
            state.h_up = 0;
        } else {
            state.temperature *= cfg.alpha;
        }
        epoch_trace.push(EpochTrace {
            temperature,
            best: state.best_fitness(),
            current: state.current_fitness(),
            h_up: state.h_up,
            reheated,
            evaluations: state.acc,
        });
        bandit_trace.push(BanditTrace {
            selections: outcome.selections,
            rewards: state.bandit.rewards,
        });
    }

    Ok(RunRecord {
        instance: inst.name().to_string(),
        selector: cfg.selector.label().to_string(),
        seed: cfg.seed,
        best_fitness: state.best_fitness(),
        initial_fitness,
        evaluations: state.acc,
        max_evaluations: max_acc,
        wall_ms: start.elapsed().as_millis() as u64,
        best_tour: to_solution_text(&state.best, inst),
        best_seq: state.best.seq().to_vec(),
        epoch_trace,
        bandit_trace,
    })
}
