//! Strong Stackelberg equilibrium of the two-type Bayesian game.
//!
//! Followers play pure best responses, so the leader's problem splits into
//! one linear program per joint follower response: maximize the prior-weighted
//! leader payoff over the strategy simplex, restricted to the region where
//! each type's designated action is a best response. The best feasible
//! candidate is the equilibrium. No integer variables or big-M constants are
//! involved.

use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::game::{BayesianGame, GameError, MixedStrategy, TypeKind};
use crate::lp::{solve_lp, LinearProgram, LpError, LpSolution, Relation};
use crate::TOLERANCE;

/// Tolerance of the best-response certificate.
pub const CERTIFICATE_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("alpha = {0} is outside [0, 1]")]
    Alpha(f64),
    #[error("alpha grid is empty")]
    EmptyGrid,
    #[error("alpha grid is not strictly increasing at position {0}")]
    GridOrder(usize),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("internal invariant breached: {0}")]
    Invariant(String),
}

fn check_alpha(alpha: f64) -> Result<(), SolveError> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(SolveError::Alpha(alpha))
    }
}

/// Index of the follower action with the highest expected payoff. Ties go to
/// the action that is best for the leader, then to the lowest index.
pub(crate) fn pick_best_response(leader: &[f64], follower: &[f64]) -> usize {
    let mut best = 0;
    for u in 1..follower.len() {
        let df = follower[u] - follower[best];
        if df > TOLERANCE || (df >= -TOLERANCE && leader[u] > leader[best] + TOLERANCE) {
            best = u;
        }
    }
    best
}

pub fn best_response(
    game: &BayesianGame,
    x: &MixedStrategy,
    kind: TypeKind,
) -> Result<usize, GameError> {
    let (leader, follower) = game.expected_payoffs(x, kind)?;
    Ok(pick_best_response(&leader, &follower))
}

/// How one follower type reacts to a committed strategy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeResponse {
    pub kind: TypeKind,
    pub action: usize,
    pub action_label: String,
    /// Follower's expected payoff for the chosen action.
    pub follower_value: f64,
    /// Leader's expected payoff against the chosen action.
    pub leader_value: f64,
}

impl TypeResponse {
    fn at(game: &BayesianGame, x: &MixedStrategy, kind: TypeKind, action: usize) -> Self {
        let ty = game.follower_type(kind);
        let leader_value = ty
            .leader_payoff
            .column(action)
            .zip(x.probs())
            .map(|(a, p)| a * p)
            .sum();
        let follower_value = ty
            .follower_payoff
            .column(action)
            .zip(x.probs())
            .map(|(a, p)| a * p)
            .sum();
        TypeResponse {
            kind,
            action,
            action_label: ty.actions[action].label.clone(),
            follower_value,
            leader_value,
        }
    }
}

fn weighted_objective(alpha: f64, responses: &[TypeResponse]) -> f64 {
    responses
        .iter()
        .map(|r| r.kind.prior(alpha) * r.leader_value)
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equilibrium {
    pub alpha: f64,
    pub strategy: MixedStrategy,
    /// One entry per follower type, legitimate first.
    pub responses: Vec<TypeResponse>,
    /// `(1 - alpha) * leader-vs-legitimate + alpha * leader-vs-adversarial`.
    pub objective: f64,
}

impl Equilibrium {
    pub fn response(&self, kind: TypeKind) -> &TypeResponse {
        self.responses
            .iter()
            .find(|r| r.kind == kind)
            .expect("equilibrium carries every follower type")
    }

    /// Checks that every type's recorded action is a best response to the
    /// strategy and that the objective matches the responses.
    pub fn certify(&self, game: &BayesianGame) -> Result<(), SolveError> {
        for resp in &self.responses {
            let (_, follower) = game.expected_payoffs(&self.strategy, resp.kind)?;
            let best = follower.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if follower[resp.action] < best - CERTIFICATE_TOL {
                return Err(SolveError::Invariant(format!(
                    "{} action {} earns {} but {} is available",
                    resp.kind, resp.action_label, follower[resp.action], best
                )));
            }
        }
        let objective = weighted_objective(self.alpha, &self.responses);
        if (objective - self.objective).abs() > CERTIFICATE_TOL {
            return Err(SolveError::Invariant(format!(
                "objective {} disagrees with responses ({objective})",
                self.objective
            )));
        }
        Ok(())
    }
}

struct Candidate {
    responses: Vec<usize>,
    strategy: MixedStrategy,
    objective: f64,
    /// Smallest margin by which a designated action beats an alternative.
    slack: f64,
}

fn candidate_program(
    game: &BayesianGame,
    alpha: f64,
    responses: &[usize],
) -> Result<LinearProgram, SolveError> {
    let n = game.num_configs();
    let objective = (0..n)
        .map(|i| {
            TypeKind::ALL
                .iter()
                .zip(responses)
                .map(|(&kind, &u)| {
                    kind.prior(alpha) * game.follower_type(kind).leader_payoff.get(i, u)
                })
                .sum()
        })
        .collect();
    let mut lp = LinearProgram::new(objective)?;
    lp.add_constraint(vec![1.0; n], Relation::Eq, 1.0)?;
    for (&kind, &u) in TypeKind::ALL.iter().zip(responses) {
        let f = &game.follower_type(kind).follower_payoff;
        for alt in (0..f.cols()).filter(|&a| a != u) {
            let coeffs = (0..n).map(|i| f.get(i, u) - f.get(i, alt)).collect();
            lp.add_constraint(coeffs, Relation::Ge, 0.0)?;
        }
    }
    Ok(lp)
}

fn solve_candidate(
    game: &BayesianGame,
    alpha: f64,
    responses: Vec<usize>,
) -> Result<Option<Candidate>, SolveError> {
    let lp = candidate_program(game, alpha, &responses)?;
    let LpSolution::Optimal { point, .. } = solve_lp(&lp) else {
        return Ok(None);
    };
    let strategy = MixedStrategy::normalized(point)?;
    let resp: Vec<TypeResponse> = TypeKind::ALL
        .iter()
        .zip(&responses)
        .map(|(&kind, &u)| TypeResponse::at(game, &strategy, kind, u))
        .collect();
    let objective = weighted_objective(alpha, &resp);
    let slack = lp
        .constraints()
        .iter()
        .skip(1)
        .map(|c| c.lhs(strategy.probs()))
        .fold(f64::INFINITY, f64::min);
    Ok(Some(Candidate {
        responses,
        strategy,
        objective,
        slack,
    }))
}

/// Optimal leader commitment when the adversary arrives with probability
/// `alpha`.
pub fn solve_stackelberg(game: &BayesianGame, alpha: f64) -> Result<Equilibrium, SolveError> {
    check_alpha(alpha)?;
    let mut best: Option<Candidate> = None;
    let joint = TypeKind::ALL
        .iter()
        .map(|&k| 0..game.follower_type(k).num_actions())
        .multi_cartesian_product();
    for responses in joint {
        let Some(c) = solve_candidate(game, alpha, responses)? else {
            continue;
        };
        let better = match &best {
            None => true,
            Some(b) => {
                c.objective > b.objective + TOLERANCE
                    || (c.objective >= b.objective - TOLERANCE && c.slack > b.slack + TOLERANCE)
            }
        };
        if better {
            best = Some(c);
        }
    }
    let best = best
        .ok_or_else(|| SolveError::Invariant("no follower response region is feasible".into()))?;
    let responses = TypeKind::ALL
        .iter()
        .zip(&best.responses)
        .map(|(&kind, &u)| TypeResponse::at(game, &best.strategy, kind, u))
        .collect();
    Ok(Equilibrium {
        alpha,
        strategy: best.strategy,
        responses,
        objective: best.objective,
    })
}

/// Objective and follower responses for a fixed commitment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub objective: f64,
    pub responses: Vec<TypeResponse>,
}

impl Evaluation {
    pub fn response(&self, kind: TypeKind) -> &TypeResponse {
        self.responses
            .iter()
            .find(|r| r.kind == kind)
            .expect("evaluation carries every follower type")
    }
}

pub fn evaluate_strategy(
    game: &BayesianGame,
    x: &MixedStrategy,
    alpha: f64,
) -> Result<Evaluation, SolveError> {
    check_alpha(alpha)?;
    let responses = TypeKind::ALL
        .iter()
        .map(|&kind| {
            let u = best_response(game, x, kind)?;
            Ok(TypeResponse::at(game, x, kind, u))
        })
        .collect::<Result<Vec<_>, GameError>>()?;
    Ok(Evaluation {
        objective: weighted_objective(alpha, &responses),
        responses,
    })
}

pub fn check_grid(grid: &[f64]) -> Result<(), SolveError> {
    if grid.is_empty() {
        return Err(SolveError::EmptyGrid);
    }
    for &a in grid {
        check_alpha(a)?;
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(SolveError::GridOrder(i + 1));
    }
    Ok(())
}

/// One equilibrium per grid point, in grid order.
pub fn sweep_alpha(
    game: &BayesianGame,
    grid: &[f64],
) -> Result<Vec<(f64, Equilibrium)>, SolveError> {
    check_grid(grid)?;
    grid.par_iter()
        .map(|&a| solve_stackelberg(game, a).map(|eq| (a, eq)))
        .collect()
}
