//! Real-valued conic subproblems: linear objective over zero, nonnegative,
//! second-order and rotated second-order cone blocks.
//!
//! Every convexified subproblem in this crate reduces to this form. The
//! rotated cone here is `{(a, d, x) : a >= 0, d >= 0, a*d >= ||x||^2}`
//! (no factor 2), which is exactly the PSD condition of a 2x2 Hermitian
//! block `[[a, b], [b*, d]]` when `x = (Re b, Im b)`. Internally rotated
//! blocks are mapped to plain second-order cones via
//! `(a + d, a - d, 2x) in SOC`, so the backend never needs a PSD cone.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettings, DefaultSolver, IPSolver, NonnegativeConeT, SecondOrderConeT, SolverStatus,
    SupportedConeT, ZeroConeT,
};
use num_complex::Complex64;
use std::fmt::Write as _;

use crate::error::RisError;

/// Real affine expression `sum coeff_i * x_i + constant` over program variables.
#[derive(Debug, Clone, Default)]
pub struct LinExpr {
    pub terms: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn constant(c: f64) -> Self {
        Self { terms: Vec::new(), constant: c }
    }

    pub fn var(idx: usize) -> Self {
        Self { terms: vec![(idx, 1.0)], constant: 0.0 }
    }

    pub fn scaled_var(idx: usize, coeff: f64) -> Self {
        Self { terms: vec![(idx, coeff)], constant: 0.0 }
    }

    pub fn add_term(&mut self, idx: usize, coeff: f64) -> &mut Self {
        self.terms.push((idx, coeff));
        self
    }

    pub fn add_constant(&mut self, c: f64) -> &mut Self {
        self.constant += c;
        self
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            terms: self.terms.iter().map(|&(i, c)| (i, c * s)).collect(),
            constant: self.constant * s,
        }
    }

    pub fn plus(&self, other: &LinExpr) -> Self {
        let mut terms = self.terms.clone();
        terms.extend_from_slice(&other.terms);
        Self { terms, constant: self.constant + other.constant }
    }

    pub fn minus(&self, other: &LinExpr) -> Self {
        self.plus(&other.scale(-1.0))
    }

    /// Evaluate at a concrete point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c * x[i]).sum::<f64>() + self.constant
    }
}

/// Complex affine expression as a (Re, Im) pair of real affine expressions.
#[derive(Debug, Clone, Default)]
pub struct CxExpr {
    pub re: LinExpr,
    pub im: LinExpr,
}

impl CxExpr {
    pub fn constant(c: Complex64) -> Self {
        Self { re: LinExpr::constant(c.re), im: LinExpr::constant(c.im) }
    }

    pub fn plus(&self, other: &CxExpr) -> Self {
        Self { re: self.re.plus(&other.re), im: self.im.plus(&other.im) }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        Complex64::new(self.re.eval(x), self.im.eval(x))
    }
}

/// Index scheme mapping a length-`n` complex decision vector onto `2n`
/// interleaved reals: entry `i` lives at `(base + 2i, base + 2i + 1)`
/// as `(Re, Im)`.
#[derive(Debug, Clone, Copy)]
pub struct ComplexLift {
    pub base: usize,
    pub len: usize,
}

impl ComplexLift {
    pub fn re_index(&self, i: usize) -> usize {
        debug_assert!(i < self.len);
        self.base + 2 * i
    }

    pub fn im_index(&self, i: usize) -> usize {
        debug_assert!(i < self.len);
        self.base + 2 * i + 1
    }

    /// Affine expression of the lifted entry `z_i` itself.
    pub fn entry(&self, i: usize) -> CxExpr {
        CxExpr {
            re: LinExpr::var(self.re_index(i)),
            im: LinExpr::var(self.im_index(i)),
        }
    }

    /// `a^H z + beta` as a complex affine expression over the lifted reals.
    ///
    /// With `z_i = x_i + j y_i` and `a_i = p + j q`:
    /// `conj(a_i) z_i = (p x_i + q y_i) + j (p y_i - q x_i)`.
    pub fn inner(&self, a: &[Complex64], beta: Complex64) -> CxExpr {
        assert_eq!(a.len(), self.len, "inner product length mismatch");
        let mut re = LinExpr::constant(beta.re);
        let mut im = LinExpr::constant(beta.im);
        for (i, c) in a.iter().enumerate() {
            re.add_term(self.re_index(i), c.re);
            re.add_term(self.im_index(i), c.im);
            im.add_term(self.im_index(i), c.re);
            im.add_term(self.re_index(i), -c.im);
        }
        CxExpr { re, im }
    }

    /// Recover the complex vector from a real solution.
    pub fn unlift(&self, x: &[f64]) -> Vec<Complex64> {
        (0..self.len)
            .map(|i| Complex64::new(x[self.re_index(i)], x[self.im_index(i)]))
            .collect()
    }
}

/// Cone tag for a constraint block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    /// All rows equal zero.
    Zero,
    /// All rows nonnegative.
    Nonneg,
    /// `rows[0] >= || rows[1..] ||`.
    Soc,
    /// `rows[0] >= 0, rows[1] >= 0, rows[0]*rows[1] >= || rows[2..] ||^2`.
    RotatedSoc,
}

#[derive(Debug, Clone)]
pub struct ConstraintBlock {
    pub rows: Vec<LinExpr>,
    pub cone: Cone,
}

/// Solver exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConicStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: ConicStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub dual_objective_value: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: u32,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveTolerances {
    pub residual: f64,
    pub max_iter: u32,
}

impl Default for SolveTolerances {
    fn default() -> Self {
        Self { residual: 1e-8, max_iter: 200 }
    }
}

/// A conic program `minimize c^T x` subject to affine blocks in cones.
#[derive(Debug, Clone, Default)]
pub struct ConicProgram {
    num_vars: usize,
    objective: Vec<f64>,
    blocks: Vec<ConstraintBlock>,
}

impl ConicProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn blocks(&self) -> &[ConstraintBlock] {
        &self.blocks
    }

    /// Allocate one fresh scalar variable.
    pub fn new_var(&mut self) -> usize {
        let idx = self.num_vars;
        self.num_vars += 1;
        self.objective.push(0.0);
        idx
    }

    /// Allocate `n` fresh scalar variables, returning the first index.
    pub fn new_vars(&mut self, n: usize) -> usize {
        let base = self.num_vars;
        for _ in 0..n {
            self.new_var();
        }
        base
    }

    /// Allocate a lifted complex vector of length `n` (2n reals, interleaved).
    pub fn lift_complex(&mut self, n: usize) -> ComplexLift {
        let base = self.new_vars(2 * n);
        ComplexLift { base, len: n }
    }

    pub fn add_objective_term(&mut self, idx: usize, coeff: f64) {
        self.objective[idx] += coeff;
    }

    pub fn add_block(&mut self, rows: Vec<LinExpr>, cone: Cone) {
        match cone {
            Cone::Soc => assert!(rows.len() >= 2, "SOC block needs dimension >= 2"),
            Cone::RotatedSoc => assert!(rows.len() >= 3, "rotated SOC block needs dimension >= 3"),
            _ => assert!(!rows.is_empty(), "empty cone block"),
        }
        self.blocks.push(ConstraintBlock { rows, cone });
    }

    /// PSD condition on the 2x2 Hermitian matrix `[[a, b], [b*, d]]`,
    /// emitted exactly as the rotated SOC block `(a, d, Re b, Im b)`.
    pub fn hermitian_psd2x2_block(&mut self, a: LinExpr, d: LinExpr, b: CxExpr) {
        self.add_block(vec![a, d, b.re, b.im], Cone::RotatedSoc);
    }

    /// Epigraph of a squared complex modulus: `|expr|^2 <= bound`.
    pub fn add_sq_modulus_le(&mut self, expr: &CxExpr, bound: LinExpr) {
        self.hermitian_psd2x2_block(bound, LinExpr::constant(1.0), expr.clone());
    }

    /// Nonnegativity of a single affine expression.
    pub fn add_nonneg(&mut self, expr: LinExpr) {
        self.add_block(vec![expr], Cone::Nonneg);
    }

    /// Lower the program to Clarabel standard form and solve it.
    pub fn solve(&self, tol: SolveTolerances) -> Result<ConicSolution, RisError> {
        let n = self.num_vars;
        // b - Ax in K  <=>  block rows Mx + v in K with A = -M, b = v.
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        let mut b: Vec<f64> = Vec::new();
        let mut cones: Vec<SupportedConeT<f64>> = Vec::new();
        let mut row = 0usize;

        let push_row = |triplets: &mut Vec<(usize, usize, f64)>,
                            b: &mut Vec<f64>,
                            row: usize,
                            expr: &LinExpr,
                            sign: f64| {
            for &(i, c) in &expr.terms {
                triplets.push((row, i, -sign * c));
            }
            b.push(sign * expr.constant);
        };

        for block in &self.blocks {
            match block.cone {
                Cone::Zero => {
                    for expr in &block.rows {
                        push_row(&mut triplets, &mut b, row, expr, 1.0);
                        row += 1;
                    }
                    cones.push(ZeroConeT(block.rows.len()));
                }
                Cone::Nonneg => {
                    for expr in &block.rows {
                        push_row(&mut triplets, &mut b, row, expr, 1.0);
                        row += 1;
                    }
                    cones.push(NonnegativeConeT(block.rows.len()));
                }
                Cone::Soc => {
                    for expr in &block.rows {
                        push_row(&mut triplets, &mut b, row, expr, 1.0);
                        row += 1;
                    }
                    cones.push(SecondOrderConeT(block.rows.len()));
                }
                Cone::RotatedSoc => {
                    let a = &block.rows[0];
                    let d = &block.rows[1];
                    push_row(&mut triplets, &mut b, row, &a.plus(d), 1.0);
                    row += 1;
                    push_row(&mut triplets, &mut b, row, &a.minus(d), 1.0);
                    row += 1;
                    for expr in &block.rows[2..] {
                        push_row(&mut triplets, &mut b, row, &expr.scale(2.0), 1.0);
                        row += 1;
                    }
                    cones.push(SecondOrderConeT(block.rows.len()));
                }
            }
        }

        let m = row;
        let a_mat = csc_from_triplets(m, n, &triplets);
        let p_mat = CscMatrix::new(n, n, vec![0; n + 1], vec![], vec![]);

        let settings = DefaultSettings {
            verbose: false,
            max_iter: tol.max_iter,
            tol_feas: tol.residual,
            tol_gap_abs: tol.residual,
            tol_gap_rel: tol.residual,
            ..DefaultSettings::default()
        };

        let mut solver = DefaultSolver::new(&p_mat, &self.objective, &a_mat, &b, &cones, settings)
            .map_err(|e| RisError::Solver(format!("solver setup failed: {e}")))?;
        solver.solve();
        let sol = &solver.solution;

        let status = match sol.status {
            SolverStatus::Solved | SolverStatus::AlmostSolved => ConicStatus::Optimal,
            SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => {
                ConicStatus::Infeasible
            }
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                ConicStatus::Unbounded
            }
            SolverStatus::MaxIterations | SolverStatus::MaxTime => ConicStatus::MaxIter,
            _ => ConicStatus::NumericalFailure,
        };

        Ok(ConicSolution {
            status,
            x: sol.x.clone(),
            objective_value: sol.obj_val,
            dual_objective_value: sol.obj_val_dual,
            primal_residual: sol.r_prim,
            dual_residual: sol.r_dual,
            iterations: sol.iterations,
        })
    }

    /// Worst primal feasibility violation of a point, recomputed from the
    /// block definitions (independent of the backend's reported residuals).
    pub fn primal_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for block in &self.blocks {
            let vals: Vec<f64> = block.rows.iter().map(|e| e.eval(x)).collect();
            let v = match block.cone {
                Cone::Zero => vals.iter().fold(0.0f64, |acc, &v| acc.max(v.abs())),
                Cone::Nonneg => vals.iter().fold(0.0f64, |acc, &v| acc.max(-v)),
                Cone::Soc => {
                    let tail: f64 = vals[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
                    tail - vals[0]
                }
                Cone::RotatedSoc => {
                    let tail: f64 = vals[2..].iter().map(|v| v * v).sum();
                    (-vals[0]).max(-vals[1]).max(tail - vals[0] * vals[1])
                }
            };
            worst = worst.max(v);
        }
        worst.max(0.0)
    }

    /// Plain-text standard-form dump for cross-checking with external solvers.
    pub fn dump_standard_form(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vars {}", self.num_vars);
        let _ = writeln!(
            out,
            "minimize {}",
            self.objective
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(i, c)| format!("{c:+e}*x{i}"))
                .collect::<Vec<_>>()
                .join(" ")
        );
        for (bi, block) in self.blocks.iter().enumerate() {
            let _ = writeln!(out, "block {bi} cone {:?} dim {}", block.cone, block.rows.len());
            for expr in &block.rows {
                let terms = expr
                    .terms
                    .iter()
                    .map(|(i, c)| format!("{c:+e}*x{i}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                let _ = writeln!(out, "  {terms} {:+e}", expr.constant);
            }
        }
        out
    }
}

fn csc_from_triplets(m: usize, n: usize, triplets: &[(usize, usize, f64)]) -> CscMatrix<f64> {
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(r, c, v) in triplets {
        by_col[c].push((r, v));
    }
    let mut colptr = Vec::with_capacity(n + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for col in by_col.iter_mut() {
        col.sort_by_key(|&(r, _)| r);
        // merge duplicate entries
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
        for &(r, v) in col.iter() {
            if let Some(last) = merged.last_mut() {
                if last.0 == r {
                    last.1 += v;
                    continue;
                }
            }
            merged.push((r, v));
        }
        for (r, v) in merged {
            rowval.push(r);
            nzval.push(v);
        }
        colptr.push(rowval.len());
    }
    CscMatrix::new(m, n, colptr, rowval, nzval)
}
