//! Repeated-game simulation against a frequency-estimating attacker.
//!
//! Each round the defender samples a configuration from its policy and a user
//! arrives: adversarial with probability `alpha`, legitimate otherwise. An
//! adversary estimates the defender's mixed strategy from the empirical
//! frequency of past configurations inside its observation window (uniform
//! before anything has been seen) and best-responds to that estimate. The
//! round succeeds with probability equal to the defender's payoff as a
//! percentage.
//!
//! Randomness comes from a single `ChaCha8Rng` stream seeded from the config,
//! so reports are reproducible across platforms.

mod subsets;

pub use subsets::{subset_analysis, SubsetResult, MAX_SUBSET_CONFIGS};

use std::collections::VecDeque;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::game::{BayesianGame, GameError, MixedStrategy, TypeKind};
use crate::solver::{pick_best_response, solve_stackelberg, SolveError};

pub const RNG_NAME: &str = "ChaCha8Rng";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("rounds must be positive")]
    ZeroRounds,
    #[error("observation window must be positive")]
    ZeroWindow,
    #[error("observation window {window} exceeds {rounds} rounds")]
    WindowTooLong { window: usize, rounds: u64 },
    #[error("alpha = {0} is outside [0, 1]")]
    Alpha(f64),
    #[error("subset analysis supports at most {MAX_SUBSET_CONFIGS} configurations, got {0}")]
    TooManyConfigs(usize),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Stackelberg commitment solved at the simulation's alpha.
    Equilibrium,
    Uniform,
    Pure(usize),
    Custom(MixedStrategy),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservationWindow {
    AllHistory,
    Last(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub rounds: u64,
    pub seed: u64,
    pub alpha: f64,
    pub observation_window: ObservationWindow,
    pub policy: Policy,
}

impl SimulationConfig {
    pub fn new(rounds: u64, seed: u64, alpha: f64, policy: Policy) -> Self {
        SimulationConfig {
            rounds,
            seed,
            alpha,
            observation_window: ObservationWindow::AllHistory,
            policy,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.rounds == 0 {
            return Err(SimError::ZeroRounds);
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(SimError::Alpha(self.alpha));
        }
        if let ObservationWindow::Last(w) = self.observation_window {
            if w == 0 {
                return Err(SimError::ZeroWindow);
            }
            if w as u64 > self.rounds {
                return Err(SimError::WindowTooLong {
                    window: w,
                    rounds: self.rounds,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub rounds_played: u64,
    pub adversarial_rounds: u64,
    /// Percentage of successful rounds overall.
    pub empirical_accuracy: f64,
    /// Percentage over adversarial rounds; `None` when there were none.
    pub empirical_accuracy_adversarial: Option<f64>,
    /// Percentage over legitimate rounds; `None` when there were none.
    pub empirical_accuracy_legitimate: Option<f64>,
    /// Final L1 distance between the attacker's estimate and the policy.
    pub attacker_strategy_estimate_error: f64,
    pub per_attack_usage: IndexMap<String, u64>,
    pub policy_strategy: MixedStrategy,
    pub seed: u64,
    pub rng: String,
}

/// Sliding (or unbounded) frequency count of observed configurations.
struct Observer {
    counts: Vec<u64>,
    history: VecDeque<usize>,
    window: ObservationWindow,
}

impl Observer {
    fn new(n: usize, window: ObservationWindow) -> Self {
        Observer {
            counts: vec![0; n],
            history: VecDeque::new(),
            window,
        }
    }

    fn observe(&mut self, config: usize) {
        self.counts[config] += 1;
        if let ObservationWindow::Last(w) = self.window {
            self.history.push_back(config);
            if self.history.len() > w {
                let old = self.history.pop_front().expect("non-empty history");
                self.counts[old] -= 1;
            }
        }
    }

    fn estimate(&self) -> Vec<f64> {
        let total: u64 = self.counts.iter().sum();
        let n = self.counts.len();
        if total == 0 {
            return vec![1.0 / n as f64; n];
        }
        self.counts
            .iter()
            .map(|&c| c as f64 / total as f64)
            .collect()
    }
}

fn resolve_policy(
    game: &BayesianGame,
    config: &SimulationConfig,
) -> Result<MixedStrategy, SimError> {
    let n = game.num_configs();
    Ok(match &config.policy {
        Policy::Equilibrium => solve_stackelberg(game, config.alpha)?.strategy,
        Policy::Uniform => MixedStrategy::uniform(n),
        Policy::Pure(i) => {
            if *i >= n {
                return Err(GameError::ConfigIndex { index: *i, len: n }.into());
            }
            MixedStrategy::pure(n, *i)
        }
        Policy::Custom(x) => {
            game.check_strategy(x)?;
            x.clone()
        }
    })
}

fn sample_index(cumulative: &[f64], u: f64) -> usize {
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

pub fn simulate(
    game: &BayesianGame,
    config: &SimulationConfig,
) -> Result<SimulationReport, SimError> {
    config.validate()?;
    let policy = resolve_policy(game, config)?;
    let adv = game.follower_type(TypeKind::Adversarial);
    let cumulative: Vec<f64> = policy
        .probs()
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p;
            Some(*acc)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut observer = Observer::new(game.num_configs(), config.observation_window);
    let mut usage = vec![0u64; game.num_attacks()];
    let (mut adv_rounds, mut adv_wins, mut legit_wins) = (0u64, 0u64, 0u64);

    for _ in 0..config.rounds {
        let served = sample_index(&cumulative, rng.random::<f64>());
        let adversarial = rng.random::<f64>() < config.alpha;
        let success_pct = if adversarial {
            let estimate = observer.estimate();
            let leader = adv.leader_payoff.weighted_columns(&estimate);
            let follower = adv.follower_payoff.weighted_columns(&estimate);
            let attack = pick_best_response(&leader, &follower);
            usage[attack] += 1;
            adv_rounds += 1;
            adv.leader_payoff.get(served, attack)
        } else {
            game.legit_accuracy()[served]
        };
        let success = rng.random::<f64>() * 100.0 < success_pct;
        if success {
            if adversarial {
                adv_wins += 1;
            } else {
                legit_wins += 1;
            }
        }
        observer.observe(served);
    }

    let legit_rounds = config.rounds - adv_rounds;
    let pct = |num: u64, den: u64| (den > 0).then(|| 100.0 * num as f64 / den as f64);
    Ok(SimulationReport {
        rounds_played: config.rounds,
        adversarial_rounds: adv_rounds,
        empirical_accuracy: 100.0 * (adv_wins + legit_wins) as f64 / config.rounds as f64,
        empirical_accuracy_adversarial: pct(adv_wins, adv_rounds),
        empirical_accuracy_legitimate: pct(legit_wins, legit_rounds),
        attacker_strategy_estimate_error: policy.l1_distance(&observer.estimate()),
        per_attack_usage: game
            .attacks()
            .iter()
            .map(|a| (a.label.clone(), usage[a.index]))
            .collect(),
        policy_strategy: policy,
        seed: config.seed,
        rng: RNG_NAME.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn game() -> BayesianGame {
        BayesianGame::build(
            &labels(&["A", "B"]),
            &[90.0, 80.0],
            &labels(&["ATK_A", "ATK_B"]),
            &[vec![80.0, 20.0], vec![30.0, 70.0]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_configs() {
        let g = game();
        let mut cfg = SimulationConfig::new(0, 1, 0.5, Policy::Uniform);
        assert_eq!(simulate(&g, &cfg).unwrap_err(), SimError::ZeroRounds);
        cfg.rounds = 10;
        cfg.observation_window = ObservationWindow::Last(11);
        assert!(matches!(
            simulate(&g, &cfg),
            Err(SimError::WindowTooLong { .. })
        ));
        cfg.observation_window = ObservationWindow::Last(0);
        assert_eq!(simulate(&g, &cfg).unwrap_err(), SimError::ZeroWindow);
        cfg.observation_window = ObservationWindow::AllHistory;
        cfg.policy = Policy::Pure(2);
        assert!(simulate(&g, &cfg).is_err());
        cfg.policy = Policy::Uniform;
        cfg.alpha = 2.0;
        assert_eq!(simulate(&g, &cfg).unwrap_err(), SimError::Alpha(2.0));
    }

    #[test]
    fn pure_policy_without_attacks() {
        let g = game();
        let rounds = 50_000;
        let r = simulate(&g, &SimulationConfig::new(rounds, 7, 0.0, Policy::Pure(1))).unwrap();
        assert_eq!(r.adversarial_rounds, 0);
        assert_eq!(r.empirical_accuracy_adversarial, None);
        let sigma = (80.0 * 20.0 / rounds as f64).sqrt();
        assert!((r.empirical_accuracy - 80.0).abs() < 3.0 * sigma);
        assert_eq!(r.attacker_strategy_estimate_error, 0.0);
        assert_eq!(r.per_attack_usage.values().sum::<u64>(), 0);
    }

    #[test]
    fn usage_counts_adversarial_rounds() {
        let g = game();
        let r = simulate(&g, &SimulationConfig::new(5_000, 3, 0.3, Policy::Uniform)).unwrap();
        assert_eq!(
            r.per_attack_usage.values().sum::<u64>(),
            r.adversarial_rounds
        );
        assert!(r.adversarial_rounds > 0 && r.adversarial_rounds < 5_000);
        assert_eq!(r.rng, RNG_NAME);
    }

    #[test]
    fn sliding_window_tracks_recent_history() {
        let mut obs = Observer::new(2, ObservationWindow::Last(2));
        assert_eq!(obs.estimate(), vec![0.5, 0.5]);
        obs.observe(0);
        obs.observe(0);
        obs.observe(1);
        assert_eq!(obs.estimate(), vec![0.5, 0.5]);
        obs.observe(1);
        assert_eq!(obs.estimate(), vec![0.0, 1.0]);
    }

    #[test]
    fn deterministic_given_seed() {
        let g = game();
        let cfg = SimulationConfig {
            observation_window: ObservationWindow::Last(100),
            ..SimulationConfig::new(2_000, 42, 0.5, Policy::Equilibrium)
        };
        assert_eq!(simulate(&g, &cfg).unwrap(), simulate(&g, &cfg).unwrap());
        let other = SimulationConfig {
            seed: 43,
            ..cfg.clone()
        };
        assert_ne!(simulate(&g, &cfg).unwrap(), simulate(&g, &other).unwrap());
    }
}
