//! Hyper-heuristic simulated annealing for the capacitated electric vehicle
//! routing problem.
//!
//! A multi-armed bandit picks one of eight perturbation heuristics at every
//! step, a Metropolis rule with adaptive reheating accepts or rejects the
//! result, and repair blocks keep vehicles within their load and battery
//! limits.
//!
//! ```no_run
//! use hhasa_core::{run, Instance, SelectorKind, SolverConfig};
//!
//! let inst = Instance::from_file("E-n22-k4.evrp").unwrap();
//! let cfg = SolverConfig { selector: SelectorKind::Thompson, seed: 7, ..SolverConfig::default() };
//! let rec = run(&inst, &cfg).unwrap();
//! println!("{}", rec.best_fitness);
//! ```

pub mod bandit;
pub mod harness;
pub mod instance;
pub mod neighborhoods;
pub mod solution;
pub mod solver;

pub use bandit::{BanditState, SelectorKind, UcbBonus};
pub use harness::{
    friedman_ranks, holm_posthoc, run_batch, summarize, BatchEntry, EnergyReport, HarnessError, HolmRow,
    MeanMatrix, MissingPolicy, RankReport, StatsRow,
};
pub use instance::{parse_instance, Instance, InstanceData, InstanceError, Node, NodeKind, Point, DEPOT};
pub use neighborhoods::{HeuristicId, Operator, POOL_SIZE};
pub use solution::{
    evaluate, parse_solution_text, to_solution_text, validate, SolutionError, Tour, Unrepairable, Violation,
    ViolationKind,
};
pub use solver::{run, ConfigError, DeltaMode, RunRecord, SolverConfig};
