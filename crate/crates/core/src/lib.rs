//! Randomized configuration scheduling for moving-target-defense ensembles.
//!
//! A defender hosts several interchangeable configurations (for example,
//! classifiers trained on the same task) and picks one per request. Users are
//! either legitimate, who only care about accuracy, or adversarial, who pick
//! the attack that fools the ensemble most often against the defender's known
//! mixed strategy. This crate
//!
//! * models that interaction as a two-type Bayesian Stackelberg game ([`game`]),
//! * computes the defender's optimal commitment by follower best-response
//!   enumeration over a small dense simplex solver ([`solver`], [`lp`]),
//! * measures how differently the configurations react to each attack
//!   ([`metrics`]),
//! * replays the repeated game against a frequency-estimating attacker and
//!   explores ensemble subsets ([`sim`]),
//! * loads and writes the JSON fixtures and CSV curves used by the CLI ([`io`]).

pub mod game;
pub mod io;
pub mod lp;
pub mod metrics;
pub mod sim;
pub mod solver;

pub use game::{
    AttackId, BayesianGame, ConfigId, FollowerType, FoolingMatrix, GameError, MixedStrategy,
    PayoffMatrix, TypeKind,
};
pub use io::{load_game, save_game, FixtureError, GameFixture};
pub use lp::{solve_lp, LinearProgram, LpError, LpSolution, LpStatus, Relation};
pub use metrics::{differential_immunity, ImmunityReport, MetricsError};
pub use sim::{
    simulate, subset_analysis, ObservationWindow, Policy, SimError, SimulationConfig,
    SimulationReport, SubsetResult,
};
pub use solver::{
    best_response, evaluate_strategy, solve_stackelberg, sweep_alpha, Equilibrium, Evaluation,
    SolveError, TypeResponse,
};

/// Absolute tolerance for simplex sums and payoff identities.
pub const TOLERANCE: f64 = 1e-9;
