//! Differential immunity of an ensemble.
//!
//! For each attack `u` the immunity is
//! `(max_n e(n,u) - min_n e(n,u) + 1) / (max_n e(n,u) + 1)` on the percentage
//! scale; the ensemble's immunity `delta` is the minimum over attacks. A value
//! near 1 means no single attack fools every configuration.

use serde::Serialize;
use thiserror::Error;

use crate::game::FoolingMatrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("fooling matrix is empty")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImmunityReport {
    pub delta: f64,
    /// Immunity per attack, indexed like the matrix columns.
    pub per_attack: Vec<f64>,
    /// Column achieving `delta`; lowest index on ties.
    pub argmin_attack: usize,
}

pub fn attack_immunity(column: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = column.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
        (lo.min(e), hi.max(e))
    });
    (hi - lo + 1.0) / (hi + 1.0)
}

pub fn differential_immunity(fooling: &FoolingMatrix) -> Result<ImmunityReport, MetricsError> {
    if fooling.is_empty() {
        return Err(MetricsError::Empty);
    }
    let per_attack: Vec<f64> = (0..fooling.attacks())
        .map(|u| attack_immunity(fooling.column(u)))
        .collect();
    let mut argmin_attack = 0;
    for (u, &v) in per_attack.iter().enumerate() {
        if v < per_attack[argmin_attack] {
            argmin_attack = u;
        }
    }
    Ok(ImmunityReport {
        delta: per_attack[argmin_attack],
        per_attack,
        argmin_attack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> FoolingMatrix {
        FoolingMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn mnist_delta() {
        let m = matrix(&[
            &[88.37, 52.46, 25.35],
            &[63.63, 98.04, 61.90],
            &[64.28, 75.92, 90.35],
        ]);
        let r = differential_immunity(&m).unwrap();
        // (88.37 - 63.63 + 1) / 89.37
        assert!((r.delta - 25.74 / 89.37).abs() < 1e-12);
        assert!((r.delta - 0.288).abs() < 0.005);
        assert_eq!(r.argmin_attack, 0);
    }

    #[test]
    fn constant_matrices() {
        let r = differential_immunity(&matrix(&[&[0.0, 0.0], &[0.0, 0.0]])).unwrap();
        assert_eq!(r.delta, 1.0);
        let r = differential_immunity(&matrix(&[&[50.0, 50.0], &[50.0, 50.0]])).unwrap();
        assert!((r.delta - 1.0 / 51.0).abs() < 1e-15);
        assert_eq!(r.argmin_attack, 0);
    }

    #[test]
    fn single_row() {
        let r = differential_immunity(&matrix(&[&[9.0, 99.0, 0.0]])).unwrap();
        assert_eq!(r.per_attack, vec![0.1, 0.01, 1.0]);
        assert_eq!(r.argmin_attack, 1);
    }

    #[test]
    fn empty_is_rejected() {
        let m = FoolingMatrix::from_rows(&[]).unwrap();
        assert_eq!(differential_immunity(&m).unwrap_err(), MetricsError::Empty);
    }
}
