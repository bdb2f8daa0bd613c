//! Game fixtures (JSON), alpha grids, and CSV output.
//!
//! Fixture schema:
//!
//! ```json
//! {
//!   "name": "mnist_fgsm",
//!   "configs": ["CNN", "MLP", "HRNN"],
//!   "attacks": ["FGSM_CNN", "FGSM_MLP", "FGSM_HRNN"],
//!   "legit_accuracy": [99.1, 98.3, 98.7],
//!   "fooling": [[88.37, 52.46, 25.35], [63.63, 98.04, 61.9], [64.28, 75.92, 90.35]],
//!   "notes": "optional free text"
//! }
//! ```
//!
//! Percentages live in `[0, 100]`. `fooling` has one row per config and one
//! column per attack. Validation errors carry the JSON path of the offending
//! element, e.g. `fooling[0][2]`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{BayesianGame, GameError, MixedStrategy};
use crate::sim::SubsetResult;
use crate::solver::{evaluate_strategy, sweep_alpha, Equilibrium, SolveError};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("`{path}`: expected {expected} entries, found {found}")]
    Dimension {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("`{path}`: {value} is outside [0, 100]")]
    OutOfRange { path: String, value: f64 },
    #[error("`{path}`: {message}")]
    Invalid { path: String, message: String },
}

impl FixtureError {
    /// Stable machine-readable category.
    pub fn code(&self) -> &'static str {
        match self {
            FixtureError::Read { .. } => "read",
            FixtureError::Parse { .. } => "parse",
            FixtureError::Dimension { .. } => "dimension",
            FixtureError::OutOfRange { .. } => "range",
            FixtureError::Invalid { .. } => "invalid",
        }
    }

    /// JSON path of the offending element, when there is one.
    pub fn json_path(&self) -> Option<&str> {
        match self {
            FixtureError::Dimension { path, .. }
            | FixtureError::OutOfRange { path, .. }
            | FixtureError::Invalid { path, .. } => Some(path),
            _ => None,
        }
    }
}

impl From<GameError> for FixtureError {
    fn from(e: GameError) -> Self {
        match e {
            GameError::DimensionMismatch {
                field,
                expected,
                found,
            } => FixtureError::Dimension {
                path: field,
                expected,
                found,
            },
            GameError::OutOfRange { location, value } => FixtureError::OutOfRange {
                path: location,
                value,
            },
            GameError::Empty { field } => FixtureError::Invalid {
                path: field,
                message: "must not be empty".into(),
            },
            GameError::NonFinite { location } => FixtureError::Invalid {
                path: location,
                message: "not a finite number".into(),
            },
            GameError::DuplicateLabel { location, label } => FixtureError::Invalid {
                path: location,
                message: format!("duplicate label {label:?}"),
            },
            other => FixtureError::Invalid {
                path: String::new(),
                message: other.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFixture {
    pub name: String,
    pub configs: Vec<String>,
    pub attacks: Vec<String>,
    pub legit_accuracy: Vec<f64>,
    /// `"unspecified"` when the clean accuracies are placeholders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legit_accuracy_status: Option<String>,
    pub fooling: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
}

impl GameFixture {
    pub fn parse(text: &str) -> Result<Self, FixtureError> {
        serde_json::from_str(text).map_err(|e| FixtureError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn to_game(&self) -> Result<BayesianGame, FixtureError> {
        Ok(BayesianGame::build(
            &self.configs,
            &self.legit_accuracy,
            &self.attacks,
            &self.fooling,
        )?)
    }

    pub fn from_game(game: &BayesianGame, name: impl Into<String>) -> Self {
        GameFixture {
            name: name.into(),
            configs: game.configs().iter().map(|c| c.label.clone()).collect(),
            attacks: game.attacks().iter().map(|a| a.label.clone()).collect(),
            legit_accuracy: game.legit_accuracy().to_vec(),
            legit_accuracy_status: None,
            fooling: game.fooling().to_rows(),
            notes: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fixture serializes")
    }
}

pub fn load_fixture(path: impl AsRef<Path>) -> Result<(GameFixture, BayesianGame), FixtureError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| FixtureError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let fixture = GameFixture::parse(&text)?;
    let game = fixture.to_game()?;
    Ok((fixture, game))
}

pub fn load_game(path: impl AsRef<Path>) -> Result<BayesianGame, FixtureError> {
    load_fixture(path).map(|(_, g)| g)
}

pub fn save_game(
    game: &BayesianGame,
    name: &str,
    path: impl AsRef<Path>,
) -> Result<(), FixtureError> {
    let path = path.as_ref();
    let mut text = GameFixture::from_game(game, name).to_json();
    text.push('\n');
    fs::write(path, text).map_err(|source| FixtureError::Read {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("malformed grid {0:?}: expected LO:HI:STEP or a comma-separated list")]
    Syntax(String),
    #[error("grid step must be positive and LO <= HI")]
    Range,
    #[error("grid has more than {0} points")]
    TooLarge(usize),
}

const MAX_GRID_POINTS: usize = 100_001;

/// Parses `LO:HI:STEP` (inclusive of `HI` when `STEP` divides the span within
/// 1e-9) or a comma-separated list.
pub fn parse_alpha_grid(text: &str) -> Result<Vec<f64>, GridError> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| GridError::Syntax(text.to_string()))
    };
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [lo, hi, step] = parts[..] else {
            return Err(GridError::Syntax(text.to_string()));
        };
        let (lo, hi, step) = (num(lo)?, num(hi)?, num(step)?);
        if step <= 0.0 || lo > hi {
            return Err(GridError::Range);
        }
        let span = hi - lo;
        let steps = (span / step).round();
        let exact = (steps * step - span).abs() <= 1e-9;
        let count = if exact {
            steps as usize
        } else {
            (span / step).floor() as usize
        };
        if count >= MAX_GRID_POINTS {
            return Err(GridError::TooLarge(MAX_GRID_POINTS));
        }
        let mut grid: Vec<f64> = (0..=count).map(|i| lo + i as f64 * step).collect();
        if exact {
            *grid.last_mut().expect("non-empty grid") = hi;
        }
        Ok(grid)
    } else {
        text.split(',').map(num).collect()
    }
}

/// Formats with six decimal places, without negative zero.
pub fn fmt6(v: f64) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

/// Rounds a probability vector to six decimals so the printed entries sum to
/// exactly one (largest-remainder apportionment, ties to the lowest index).
pub fn fmt_simplex6(probs: &[f64]) -> Vec<String> {
    const UNITS: i64 = 1_000_000;
    let scaled: Vec<f64> = probs.iter().map(|p| p.max(0.0) * UNITS as f64).collect();
    let mut units: Vec<i64> = scaled.iter().map(|s| s.floor() as i64).collect();
    let mut rest = UNITS - units.iter().sum::<i64>();
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut i = 0;
    while rest != 0 && !order.is_empty() {
        let j = order[i % order.len()];
        if rest > 0 {
            units[j] += 1;
            rest -= 1;
        } else if units[j] > 0 {
            units[j] -= 1;
            rest += 1;
        }
        i += 1;
    }
    units
        .iter()
        .map(|u| format!("{}.{:06}", u / UNITS, u % UNITS))
        .collect()
}

/// One grid point of an alpha sweep with the baselines alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub equilibrium: Equilibrium,
    /// Objective of committing to each single configuration.
    pub pure: Vec<f64>,
    /// Objective of the uniform random strategy.
    pub uniform: f64,
}

pub fn curve_rows(game: &BayesianGame, grid: &[f64]) -> Result<Vec<CurveRow>, SolveError> {
    let n = game.num_configs();
    sweep_alpha(game, grid)?
        .into_iter()
        .map(|(alpha, equilibrium)| {
            let pure = (0..n)
                .map(|i| Ok(evaluate_strategy(game, &MixedStrategy::pure(n, i), alpha)?.objective))
                .collect::<Result<Vec<_>, SolveError>>()?;
            let uniform = evaluate_strategy(game, &MixedStrategy::uniform(n), alpha)?.objective;
            Ok(CurveRow {
                equilibrium,
                pure,
                uniform,
            })
        })
        .collect()
}

/// Header: `alpha,objective,<config>...,chosen_attack,pure_<config>...,uniform`.
pub fn write_curve_csv<W: Write>(
    game: &BayesianGame,
    rows: &[CurveRow],
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["alpha".to_string(), "objective".to_string()];
    header.extend(game.configs().iter().map(|c| c.label.clone()));
    header.push("chosen_attack".into());
    header.extend(game.configs().iter().map(|c| format!("pure_{}", c.label)));
    header.push("uniform".into());
    w.write_record(&header)?;
    for row in rows {
        let eq = &row.equilibrium;
        let mut rec = vec![fmt6(eq.alpha), fmt6(eq.objective)];
        rec.extend(fmt_simplex6(eq.strategy.probs()));
        rec.push(
            eq.response(crate::game::TypeKind::Adversarial)
                .action_label
                .clone(),
        );
        rec.extend(row.pure.iter().map(|&v| fmt6(v)));
        rec.push(fmt6(row.uniform));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Header: `size,alpha,objective,configs` with configs joined by `+`.
pub fn write_subsets_csv<W: Write>(rows: &[SubsetResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["size", "alpha", "objective", "configs"])?;
    for r in rows {
        w.write_record([
            r.size.to_string(),
            fmt6(r.alpha),
            fmt6(r.objective),
            r.configs.join("+"),
        ])?;
    }
    w.flush()?;
    Ok(())
}
