//! Domain model of the defender / user Bayesian Stackelberg game.
//!
//! All payoffs are percentages in `[0, 100]`. The legitimate user shares the
//! defender's payoff (clean accuracy); the adversary is rewarded with the
//! fooling rate `e(n, u)` while the defender keeps `100 - e(n, u)`.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::TOLERANCE;

/// Label of the single action available to the legitimate user.
pub const LEGITIMATE_ACTION: &str = "Classification Image";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("`{field}` has length {found}, expected {expected}")]
    DimensionMismatch {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("`{field}` is empty")]
    Empty { field: String },
    #[error("`{location}` = {value} is outside [0, 100]")]
    OutOfRange { location: String, value: f64 },
    #[error("`{location}` is not a finite number")]
    NonFinite { location: String },
    #[error("duplicate label {label:?} at `{location}`")]
    DuplicateLabel { location: String, label: String },
    #[error("invalid mixed strategy: {0}")]
    InvalidStrategy(String),
    #[error("config index {index} out of bounds for {len} configurations")]
    ConfigIndex { index: usize, len: usize },
}

/// Dense index plus a short human-readable label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Labeled {
    pub index: usize,
    pub label: String,
}

impl fmt::Display for Labeled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

pub type ConfigId = Labeled;
pub type AttackId = Labeled;

fn labeled(field: &str, labels: &[String]) -> Result<Vec<Labeled>, GameError> {
    if labels.is_empty() {
        return Err(GameError::Empty {
            field: field.to_string(),
        });
    }
    let mut seen = HashSet::new();
    labels
        .iter()
        .enumerate()
        .map(|(index, label)| {
            if !seen.insert(label.as_str()) {
                return Err(GameError::DuplicateLabel {
                    location: format!("{field}[{index}]"),
                    label: label.clone(),
                });
            }
            Ok(Labeled {
                index,
                label: label.clone(),
            })
        })
        .collect()
}

/// Clamps values within `1e-6` of the `[0, 100]` range, rejects the rest.
fn percentage(location: impl FnOnce() -> String, value: f64) -> Result<f64, GameError> {
    const SLACK: f64 = 1e-6;
    if !value.is_finite() {
        return Err(GameError::NonFinite {
            location: location(),
        });
    }
    if !(-SLACK..=100.0 + SLACK).contains(&value) {
        return Err(GameError::OutOfRange {
            location: location(),
            value,
        });
    }
    Ok(value.clamp(0.0, 100.0))
}

/// Row-major `rows x cols` matrix of payoffs, indexed `(config, action)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl PayoffMatrix {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        PayoffMatrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.rows).map(move |r| self.get(r, col))
    }

    /// `x`-weighted average of every column.
    pub fn weighted_columns(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, &w) in x.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(self.row(r)) {
                *o += w * v;
            }
        }
        out
    }

    fn select_rows(&self, rows: &[usize]) -> Self {
        PayoffMatrix::from_fn(rows.len(), self.cols, |r, c| self.get(rows[r], c))
    }
}

/// Fooling rate `e(n, u)` for every (configuration, attack) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoolingMatrix(PayoffMatrix);

impl FoolingMatrix {
    /// Builds the matrix from rows, validating shape and range. Empty input is
    /// allowed here; games reject it.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, GameError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(GameError::DimensionMismatch {
                    field: format!("fooling[{r}]"),
                    expected: cols,
                    found: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                data.push(percentage(|| format!("fooling[{r}][{c}]"), v)?);
            }
        }
        Ok(FoolingMatrix(PayoffMatrix {
            rows: rows.len(),
            cols,
            data,
        }))
    }

    pub fn configs(&self) -> usize {
        self.0.rows
    }

    pub fn attacks(&self) -> usize {
        self.0.cols
    }

    pub fn is_empty(&self) -> bool {
        self.0.rows == 0 || self.0.cols == 0
    }

    #[inline]
    pub fn get(&self, config: usize, attack: usize) -> f64 {
        self.0.get(config, attack)
    }

    pub fn row(&self, config: usize) -> &[f64] {
        self.0.row(config)
    }

    pub fn column(&self, attack: usize) -> impl Iterator<Item = f64> + '_ {
        self.0.column(attack)
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.0.rows).map(|r| self.0.row(r).to_vec()).collect()
    }

    pub fn as_matrix(&self) -> &PayoffMatrix {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeKind {
    Legitimate,
    Adversarial,
}

impl TypeKind {
    pub const ALL: [TypeKind; 2] = [TypeKind::Legitimate, TypeKind::Adversarial];

    /// Prior weight of this type when the attack probability is `alpha`.
    pub fn prior(self, alpha: f64) -> f64 {
        match self {
            TypeKind::Legitimate => 1.0 - alpha,
            TypeKind::Adversarial => alpha,
        }
    }
}

impl fmt::Display for TypeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TypeKind::Legitimate => "legitimate",
            TypeKind::Adversarial => "adversarial",
        })
    }
}

/// One follower type with its action set and the bimatrix it plays.
#[derive(Debug, Clone, PartialEq)]
pub struct FollowerType {
    pub kind: TypeKind,
    pub actions: Vec<AttackId>,
    pub leader_payoff: PayoffMatrix,
    pub follower_payoff: PayoffMatrix,
}

impl FollowerType {
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }
}

/// Probability vector over defender configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self, GameError> {
        if probs.is_empty() {
            return Err(GameError::InvalidStrategy("no configurations".into()));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !p.is_finite() || **p < -TOLERANCE || **p > 1.0 + TOLERANCE)
        {
            return Err(GameError::InvalidStrategy(format!(
                "probability {p} at index {i} is outside [0, 1]"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > TOLERANCE {
            return Err(GameError::InvalidStrategy(format!(
                "probabilities sum to {sum}, not 1"
            )));
        }
        Ok(MixedStrategy {
            probs: probs.into_iter().map(|p| p.clamp(0.0, 1.0)).collect(),
        })
    }

    /// Clips negatives and renormalizes. Used for solver output where the
    /// vector is a simplex point up to round-off.
    pub fn normalized(mut probs: Vec<f64>) -> Result<Self, GameError> {
        for p in probs.iter_mut() {
            *p = p.max(0.0);
        }
        let sum: f64 = probs.iter().sum();
        if !(sum > 0.0 && sum.is_finite()) {
            return Err(GameError::InvalidStrategy(format!(
                "cannot normalize vector with mass {sum}"
            )));
        }
        probs.iter_mut().for_each(|p| *p /= sum);
        Ok(MixedStrategy { probs })
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0, "uniform strategy over zero configurations");
        MixedStrategy {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn pure(n: usize, index: usize) -> Self {
        assert!(index < n, "pure strategy index {index} out of {n}");
        let mut probs = vec![0.0; n];
        probs[index] = 1.0;
        MixedStrategy { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn l1_distance(&self, other: &[f64]) -> f64 {
        self.probs
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }
}

/// The two-type Bayesian game. The attack probability `alpha` is supplied at
/// solve time and never stored here.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesianGame {
    configs: Vec<ConfigId>,
    attacks: Vec<AttackId>,
    legit_accuracy: Vec<f64>,
    fooling: FoolingMatrix,
    types: [FollowerType; 2],
}

impl BayesianGame {
    /// Builds a game from clean accuracies and a fooling-rate matrix.
    ///
    /// The legitimate type gets one action whose payoff is the clean accuracy
    /// for both players; the adversarial type gets one action per attack with
    /// payoff `e(n, u)` for the attacker and `100 - e(n, u)` for the defender.
    pub fn build(
        config_labels: &[String],
        legit_accuracy: &[f64],
        attack_labels: &[String],
        fooling: &[Vec<f64>],
    ) -> Result<Self, GameError> {
        let configs = labeled("configs", config_labels)?;
        let attacks = labeled("attacks", attack_labels)?;
        let n = configs.len();
        let k = attacks.len();
        if legit_accuracy.len() != n {
            return Err(GameError::DimensionMismatch {
                field: "legit_accuracy".into(),
                expected: n,
                found: legit_accuracy.len(),
            });
        }
        if fooling.len() != n {
            return Err(GameError::DimensionMismatch {
                field: "fooling".into(),
                expected: n,
                found: fooling.len(),
            });
        }
        for (r, row) in fooling.iter().enumerate() {
            if row.len() != k {
                return Err(GameError::DimensionMismatch {
                    field: format!("fooling[{r}]"),
                    expected: k,
                    found: row.len(),
                });
            }
        }
        let legit_accuracy = legit_accuracy
            .iter()
            .enumerate()
            .map(|(i, &v)| percentage(|| format!("legit_accuracy[{i}]"), v))
            .collect::<Result<Vec<_>, _>>()?;
        let fooling = FoolingMatrix::from_rows(fooling)?;
        Ok(Self::assemble(configs, attacks, legit_accuracy, fooling))
    }

    fn assemble(
        configs: Vec<ConfigId>,
        attacks: Vec<AttackId>,
        legit_accuracy: Vec<f64>,
        fooling: FoolingMatrix,
    ) -> Self {
        let n = configs.len();
        let legit = PayoffMatrix::from_fn(n, 1, |r, _| legit_accuracy[r]);
        let legitimate = FollowerType {
            kind: TypeKind::Legitimate,
            actions: vec![Labeled {
                index: 0,
                label: LEGITIMATE_ACTION.to_string(),
            }],
            leader_payoff: legit.clone(),
            follower_payoff: legit,
        };
        let adversarial = FollowerType {
            kind: TypeKind::Adversarial,
            actions: attacks.clone(),
            leader_payoff: PayoffMatrix::from_fn(n, attacks.len(), |r, c| {
                100.0 - fooling.get(r, c)
            }),
            follower_payoff: fooling.as_matrix().clone(),
        };
        BayesianGame {
            configs,
            attacks,
            legit_accuracy,
            fooling,
            types: [legitimate, adversarial],
        }
    }

    pub fn configs(&self) -> &[ConfigId] {
        &self.configs
    }

    pub fn attacks(&self) -> &[AttackId] {
        &self.attacks
    }

    pub fn num_configs(&self) -> usize {
        self.configs.len()
    }

    pub fn num_attacks(&self) -> usize {
        self.attacks.len()
    }

    pub fn legit_accuracy(&self) -> &[f64] {
        &self.legit_accuracy
    }

    pub fn fooling(&self) -> &FoolingMatrix {
        &self.fooling
    }

    pub fn types(&self) -> &[FollowerType; 2] {
        &self.types
    }

    pub fn follower_type(&self, kind: TypeKind) -> &FollowerType {
        match kind {
            TypeKind::Legitimate => &self.types[0],
            TypeKind::Adversarial => &self.types[1],
        }
    }

    pub fn config_index(&self, label: &str) -> Option<usize> {
        self.configs.iter().position(|c| c.label == label)
    }

    /// Expected leader and follower payoff of every action of `kind` when the
    /// defender commits to `x`.
    pub fn expected_payoffs(
        &self,
        x: &MixedStrategy,
        kind: TypeKind,
    ) -> Result<(Vec<f64>, Vec<f64>), GameError> {
        self.check_strategy(x)?;
        let ty = self.follower_type(kind);
        Ok((
            ty.leader_payoff.weighted_columns(x.probs()),
            ty.follower_payoff.weighted_columns(x.probs()),
        ))
    }

    pub fn check_strategy(&self, x: &MixedStrategy) -> Result<(), GameError> {
        if x.len() != self.num_configs() {
            return Err(GameError::DimensionMismatch {
                field: "strategy".into(),
                expected: self.num_configs(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Sub-game keeping the listed configurations, in the listed order. The
    /// attack set is unchanged. Indices are re-densified.
    pub fn select_configs(&self, indices: &[usize]) -> Result<Self, GameError> {
        if indices.is_empty() {
            return Err(GameError::Empty {
                field: "configs".into(),
            });
        }
        let mut seen = HashSet::new();
        for &i in indices {
            if i >= self.num_configs() {
                return Err(GameError::ConfigIndex {
                    index: i,
                    len: self.num_configs(),
                });
            }
            if !seen.insert(i) {
                return Err(GameError::DuplicateLabel {
                    location: format!("configs[{i}]"),
                    label: self.configs[i].label.clone(),
                });
            }
        }
        let configs = indices
            .iter()
            .enumerate()
            .map(|(index, &i)| Labeled {
                index,
                label: self.configs[i].label.clone(),
            })
            .collect();
        let legit = indices.iter().map(|&i| self.legit_accuracy[i]).collect();
        let fooling = FoolingMatrix(self.fooling.0.select_rows(indices));
        Ok(Self::assemble(
            configs,
            self.attacks.clone(),
            legit,
            fooling,
        ))
    }
}
