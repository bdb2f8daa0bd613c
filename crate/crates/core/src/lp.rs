//! Dense two-phase primal simplex for the small programs built by the solver.
//!
//! Pivoting uses the largest reduced profit (Dantzig) for the first
//! `10 * (vars + constraints)` iterations of each phase, then falls back to
//! Bland's smallest-index rule, which cannot cycle. Ratio-test ties always go
//! to the basic variable with the smallest index. Identical input therefore
//! produces identical output.

use thiserror::Error;

/// Ceiling on structural variables.
pub const MAX_VARS: usize = 64;
/// Ceiling on explicit constraints (bound rows excluded).
pub const MAX_CONSTRAINTS: usize = 256;
/// Feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-7;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("constraint {index} has {found} coefficients, expected {expected}")]
    Dimension {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("too many variables: {0} > {MAX_VARS}")]
    TooManyVars(usize),
    #[error("too many constraints: {MAX_CONSTRAINTS} already present")]
    TooManyConstraints,
    #[error("non-finite coefficient in {0}")]
    NonFinite(&'static str),
    #[error("invalid bounds [{lo}, {hi}] for variable {var}")]
    Bounds { var: usize, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn is_satisfied(&self, x: &[f64], tol: f64) -> bool {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => lhs <= self.rhs + tol,
            Relation::Ge => lhs >= self.rhs - tol,
            Relation::Eq => (lhs - self.rhs).abs() <= tol,
        }
    }
}

/// `maximize objective . x` subject to linear constraints and per-variable
/// bounds (default `[0, +inf)`).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Result<Self, LpError> {
        if objective.len() > MAX_VARS {
            return Err(LpError::TooManyVars(objective.len()));
        }
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("objective"));
        }
        let bounds = vec![(0.0, f64::INFINITY); objective.len()];
        Ok(LinearProgram {
            objective,
            constraints: Vec::new(),
            bounds,
        })
    }

    pub fn add_constraint(
        &mut self,
        coeffs: Vec<f64>,
        relation: Relation,
        rhs: f64,
    ) -> Result<&mut Self, LpError> {
        if coeffs.len() != self.objective.len() {
            return Err(LpError::Dimension {
                index: self.constraints.len(),
                expected: self.objective.len(),
                found: coeffs.len(),
            });
        }
        if self.constraints.len() >= MAX_CONSTRAINTS {
            return Err(LpError::TooManyConstraints);
        }
        if !rhs.is_finite() || coeffs.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite("constraint"));
        }
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        Ok(self)
    }

    /// `hi` may be `f64::INFINITY`; `lo` must be finite.
    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) -> Result<&mut Self, LpError> {
        if var >= self.objective.len() || !lo.is_finite() || hi.is_nan() || lo > hi {
            return Err(LpError::Bounds { var, lo, hi });
        }
        self.bounds[var] = (lo, hi);
        Ok(self)
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.num_vars()
            && x.iter()
                .zip(&self.bounds)
                .all(|(&v, &(lo, hi))| v >= lo - tol && v <= hi + tol)
            && self.constraints.iter().all(|c| c.is_satisfied(x, tol))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpSolution {
    Optimal { point: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpSolution {
    pub fn status(&self) -> LpStatus {
        match self {
            LpSolution::Optimal { .. } => LpStatus::Optimal,
            LpSolution::Infeasible => LpStatus::Infeasible,
            LpSolution::Unbounded => LpStatus::Unbounded,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            LpSolution::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn point(&self) -> Option<&[f64]> {
        match self {
            LpSolution::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }
}

/// Solves `lp`, returning a vertex optimum when one exists.
pub fn solve_lp(lp: &LinearProgram) -> LpSolution {
    Tableau::build(lp).solve(lp)
}

struct Tableau {
    /// `rows x (cols + 1)`; the last column is the right-hand side.
    a: Vec<f64>,
    rows: usize,
    cols: usize,
    /// Reduced profits, with `-(current objective)` in the last slot.
    obj: Vec<f64>,
    basis: Vec<usize>,
    structural: usize,
    first_artificial: usize,
}

impl Tableau {
    fn width(&self) -> usize {
        self.cols + 1
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.a[r * self.width() + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn build(lp: &LinearProgram) -> Self {
        let m = lp.num_vars();
        // Shift x = lo + y so every y >= 0; finite upper bounds become rows.
        let mut rows: Vec<(Vec<f64>, Relation, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                let shift: f64 = c
                    .coeffs
                    .iter()
                    .zip(&lp.bounds)
                    .map(|(a, (lo, _))| a * lo)
                    .sum();
                (c.coeffs.clone(), c.relation, c.rhs - shift)
            })
            .collect();
        for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
            if hi.is_finite() {
                let mut coeffs = vec![0.0; m];
                coeffs[j] = 1.0;
                rows.push((coeffs, Relation::Le, hi - lo));
            }
        }
        for row in rows.iter_mut() {
            if row.2 < 0.0 {
                row.0.iter_mut().for_each(|v| *v = -*v);
                row.2 = -row.2;
                row.1 = match row.1 {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }

        let slacks = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let artificials = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let cols = m + slacks + artificials;
        let first_artificial = m + slacks;
        let width = cols + 1;
        let mut a = vec![0.0; rows.len() * width];
        let mut basis = Vec::with_capacity(rows.len());
        let (mut next_slack, mut next_art) = (m, first_artificial);
        for (r, (coeffs, rel, rhs)) in rows.iter().enumerate() {
            let line = &mut a[r * width..(r + 1) * width];
            line[..m].copy_from_slice(coeffs);
            line[cols] = *rhs;
            match rel {
                Relation::Le => {
                    line[next_slack] = 1.0;
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    line[next_slack] = -1.0;
                    next_slack += 1;
                    line[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    line[next_art] = 1.0;
                    basis.push(next_art);
                    next_art += 1;
                }
            }
        }
        Tableau {
            a,
            rows: rows.len(),
            cols,
            obj: vec![0.0; width],
            basis,
            structural: m,
            first_artificial,
        }
    }

    fn solve(mut self, lp: &LinearProgram) -> LpSolution {
        let iteration_budget = 10 * (lp.num_vars() + lp.constraints.len());

        if self.first_artificial < self.cols {
            let costs: Vec<f64> = (0..self.cols)
                .map(|j| {
                    if j >= self.first_artificial {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            self.load_objective(&costs);
            // Phase one is bounded below by zero, so it cannot be unbounded.
            let _ = self.run(self.cols, iteration_budget);
            if -self.obj[self.cols] < -FEAS_TOL {
                return LpSolution::Infeasible;
            }
            self.expel_artificials();
        }

        let mut costs = vec![0.0; self.cols];
        costs[..self.structural].copy_from_slice(&lp.objective);
        self.load_objective(&costs);
        if !self.run(self.first_artificial, iteration_budget) {
            return LpSolution::Unbounded;
        }

        let mut point: Vec<f64> = lp.bounds.iter().map(|b| b.0).collect();
        for (r, &b) in self.basis.iter().enumerate() {
            if b < self.structural {
                point[b] += self.rhs(r).max(0.0);
            }
        }
        let value = lp.value_at(&point);
        LpSolution::Optimal { point, value }
    }

    /// Sets the objective row to `costs` priced out against the current basis.
    fn load_objective(&mut self, costs: &[f64]) {
        let width = self.width();
        self.obj[..self.cols].copy_from_slice(costs);
        self.obj[self.cols] = 0.0;
        for r in 0..self.rows {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                let row = &self.a[r * width..(r + 1) * width];
                for (o, v) in self.obj.iter_mut().zip(row) {
                    *o -= cb * v;
                }
            }
        }
    }

    /// Pivots until optimal. Columns `>= allowed` never enter. Returns false
    /// when the program is unbounded.
    fn run(&mut self, allowed: usize, budget: usize) -> bool {
        let mut iterations = 0usize;
        loop {
            let bland = iterations >= budget;
            let entering = if bland {
                (0..allowed).find(|&j| self.obj[j] > COST_TOL)
            } else {
                let mut best: Option<(usize, f64)> = None;
                for j in 0..allowed {
                    let d = self.obj[j];
                    if d > COST_TOL && best.is_none_or(|(_, bd)| d > bd) {
                        best = Some((j, d));
                    }
                }
                best.map(|(j, _)| j)
            };
            let Some(col) = entering else {
                return true;
            };
            let Some(row) = self.ratio_test(col) else {
                return false;
            };
            self.pivot(row, col);
            iterations += 1;
        }
    }

    fn ratio_test(&self, col: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, col);
            if a > PIVOT_TOL {
                let ratio = self.rhs(r).max(0.0) / a;
                let better = match best {
                    None => true,
                    Some((br, bratio)) => {
                        ratio < bratio - 1e-12
                            || (ratio <= bratio + 1e-12 && self.basis[r] < self.basis[br])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
        }
        best.map(|(r, _)| r)
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.width();
        let p = self.at(row, col);
        {
            let line = &mut self.a[row * width..(row + 1) * width];
            line.iter_mut().for_each(|v| *v /= p);
            line[col] = 1.0;
        }
        let pivot_row: Vec<f64> = self.a[row * width..(row + 1) * width].to_vec();
        for r in 0..self.rows {
            if r == row {
                continue;
            }
            let factor = self.at(r, col);
            if factor != 0.0 {
                let line = &mut self.a[r * width..(r + 1) * width];
                for (v, pv) in line.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                line[col] = 0.0;
            }
        }
        let factor = self.obj[col];
        if factor != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(&pivot_row) {
                *v -= factor * pv;
            }
            self.obj[col] = 0.0;
        }
        self.basis[row] = col;
    }

    /// After phase one, pivots zero-level artificials out of the basis and
    /// drops rows that turn out to be redundant.
    fn expel_artificials(&mut self) {
        let mut r = 0;
        while r < self.rows {
            if self.basis[r] >= self.first_artificial {
                let replacement = (0..self.first_artificial)
                    .filter(|&j| self.at(r, j).abs() > PIVOT_TOL)
                    .max_by(|&i, &j| {
                        self.at(r, i)
                            .abs()
                            .total_cmp(&self.at(r, j).abs())
                            .then(j.cmp(&i))
                    });
                match replacement {
                    Some(col) => self.pivot(r, col),
                    None => {
                        self.remove_row(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    fn remove_row(&mut self, row: usize) {
        let width = self.width();
        self.a.drain(row * width..(row + 1) * width);
        self.basis.remove(row);
        self.rows -= 1;
    }
}
