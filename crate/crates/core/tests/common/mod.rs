//! Independent oracles shared by the integration suites.
#![allow(dead_code)]

use mtd_core::lp::Relation;
use mtd_core::{evaluate_strategy, load_game, BayesianGame, LinearProgram, MixedStrategy};
use rand::Rng;

pub const FIXTURES: [&str; 5] = [
    "mnist_fgsm",
    "imagenet_up",
    "mnist_adv_trained",
    "synthetic_2x2",
    "synthetic_identical_rows",
];

pub fn fixture_path(name: &str) -> String {
    format!("{}/../../fixtures/{name}.json", env!("CARGO_MANIFEST_DIR"))
}

pub fn fixture(name: &str) -> BayesianGame {
    load_game(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting. `None` when singular.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    let pivot = a[col].clone();
                    for (dst, src) in a[r][col..].iter_mut().zip(&pivot[col..]) {
                        *dst -= f * src;
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Best objective over all basic feasible points of a bounded program with
/// `x >= 0`. `None` when no vertex is feasible.
pub fn vertex_enumeration(lp: &LinearProgram) -> Option<f64> {
    let m = lp.num_vars();
    let mut rows: Vec<(Vec<f64>, f64)> = lp
        .constraints()
        .iter()
        .map(|c| (c.coeffs.clone(), c.rhs))
        .collect();
    for j in 0..m {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        rows.push((e, 0.0));
    }
    let mut best: Option<f64> = None;
    // Equalities need not all be in the active set; feasibility checks them.
    for active in combinations(rows.len(), m) {
        let a = active.iter().map(|&i| rows[i].0.clone()).collect();
        let b = active.iter().map(|&i| rows[i].1).collect();
        let Some(x) = solve_square(a, b) else {
            continue;
        };
        if lp.is_feasible(&x, 1e-7) {
            let v = lp.value_at(&x);
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best
}

/// Random feasible, bounded program with `m` variables and `k` constraints
/// (the last one caps the sum of all variables).
pub fn random_feasible_lp(rng: &mut impl Rng, m: usize, k: usize) -> LinearProgram {
    let coeff = |rng: &mut dyn rand::RngCore| (rng.random_range(-50..=50) as f64) / 10.0;
    let x0: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..5.0)).collect();
    let objective = (0..m).map(|_| coeff(rng)).collect();
    let mut lp = LinearProgram::new(objective).unwrap();
    for _ in 0..k.saturating_sub(1) {
        let a: Vec<f64> = (0..m).map(|_| coeff(rng)).collect();
        let ax: f64 = a.iter().zip(&x0).map(|(p, q)| p * q).sum();
        let (rel, rhs) = match rng.random_range(0..10) {
            0..=5 => (Relation::Le, ax + rng.random_range(0.0..3.0)),
            6..=7 => (Relation::Ge, ax - rng.random_range(0.0..3.0)),
            _ => (Relation::Eq, ax),
        };
        lp.add_constraint(a, rel, rhs).unwrap();
    }
    let cap = x0.iter().sum::<f64>() + rng.random_range(0.0..5.0);
    lp.add_constraint(vec![1.0; m], Relation::Le, cap).unwrap();
    lp
}

/// Every point of the simplex grid with resolution `1 / steps`, for `n <= 3`.
pub fn simplex_grid(n: usize, steps: usize) -> Vec<Vec<f64>> {
    let s = steps as f64;
    match n {
        1 => vec![vec![1.0]],
        2 => (0..=steps)
            .map(|i| vec![i as f64 / s, (steps - i) as f64 / s])
            .collect(),
        3 => (0..=steps)
            .flat_map(|i| {
                (0..=steps - i)
                    .map(move |j| vec![i as f64 / s, j as f64 / s, (steps - i - j) as f64 / s])
            })
            .collect(),
        _ => panic!("simplex grid only implemented for n <= 3"),
    }
}

/// Brute-force optimum: best `evaluate_strategy` over the step-0.002 grid.
pub fn grid_optimum(game: &BayesianGame, alpha: f64) -> f64 {
    simplex_grid(game.num_configs(), 500)
        .into_iter()
        .map(|x| {
            let x = MixedStrategy::new(x).unwrap();
            evaluate_strategy(game, &x, alpha).unwrap().objective
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Random game with `n` configs and `k` attacks; clean accuracies in
/// `[60, 100]`, fooling rates in `[0, 100]`, both at two decimals.
pub fn random_game(rng: &mut impl Rng, n: usize, k: usize) -> BayesianGame {
    let configs: Vec<String> = (0..n).map(|i| format!("c{i}")).collect();
    let attacks: Vec<String> = (0..k).map(|i| format!("a{i}")).collect();
    let legit: Vec<f64> = (0..n)
        .map(|_| rng.random_range(6000..=10000) as f64 / 100.0)
        .collect();
    let fooling: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            (0..k)
                .map(|_| rng.random_range(0..=10000) as f64 / 100.0)
                .collect()
        })
        .collect();
    BayesianGame::build(&configs, &legit, &attacks, &fooling).unwrap()
}

/// Max over configurations of the defender's worst column payoff.
pub fn max_min_leader(game: &BayesianGame) -> (f64, usize) {
    (0..game.num_configs())
        .map(|i| {
            let worst = game
                .fooling()
                .row(i)
                .iter()
                .map(|e| 100.0 - e)
                .fold(f64::INFINITY, f64::min);
            (worst, i)
        })
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a })
}
