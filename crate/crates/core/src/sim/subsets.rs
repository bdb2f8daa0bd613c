use itertools::Itertools;
use rayon::prelude::*;
use serde::Serialize;

use super::SimError;
use crate::game::BayesianGame;
use crate::solver::{check_grid, solve_stackelberg, SolveError};

/// Exhaustive enumeration is `2^n` solves per alpha.
pub const MAX_SUBSET_CONFIGS: usize = 12;

/// Best ensemble of a given size at one attack probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsetResult {
    pub size: usize,
    pub alpha: f64,
    pub objective: f64,
    /// Labels of the best subset, in game order. The first subset in
    /// lexicographic index order wins ties.
    pub configs: Vec<String>,
}

/// For each ensemble size `1..=n` and each alpha, the best equilibrium
/// objective over all subsets of that size. Results are ordered by size, then
/// by alpha.
pub fn subset_analysis(game: &BayesianGame, alphas: &[f64]) -> Result<Vec<SubsetResult>, SimError> {
    let n = game.num_configs();
    if n > MAX_SUBSET_CONFIGS {
        return Err(SimError::TooManyConfigs(n));
    }
    check_grid(alphas)?;

    let jobs: Vec<(usize, f64)> = (1..=n)
        .flat_map(|m| alphas.iter().map(move |&a| (m, a)))
        .collect();
    jobs.into_par_iter()
        .map(|(size, alpha)| {
            let mut best: Option<(f64, Vec<usize>)> = None;
            for subset in (0..n).combinations(size) {
                let sub = game.select_configs(&subset).map_err(SolveError::from)?;
                let value = solve_stackelberg(&sub, alpha)?.objective;
                if best
                    .as_ref()
                    .is_none_or(|(b, _)| value > *b + crate::TOLERANCE)
                {
                    best = Some((value, subset));
                }
            }
            let (objective, subset) = best.expect("at least one subset per size");
            Ok(SubsetResult {
                size,
                alpha,
                objective,
                configs: subset
                    .iter()
                    .map(|&i| game.configs()[i].label.clone())
                    .collect(),
            })
        })
        .collect()
}
