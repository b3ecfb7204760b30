//! Penalty-based convex-concave procedure for destructive RIS beamforming:
//! the perfect-CSI problems (single-UE and with min-SNR constraints) and
//! their robust counterparts under a bounded static-path error.
//!
//! Every outer iteration linearizes the concave pieces around the current
//! pattern and solves one conic subproblem. All channel data is rescaled to
//! unit amplitude before building subproblems so the penalty weights and
//! solver tolerances act on O(1) quantities regardless of path loss; slacks
//! `d` and the pattern itself are scale-free, power-like quantities scale
//! back by the squared amplitude.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::conic::{
    ComplexLift, Cone, ConicProgram, ConicStatus, CxExpr, LinExpr, SolveTolerances,
};
use crate::error::RisError;

/// RIS phase-shift vector. After finalization every entry is unit modulus
/// to within 1e-6.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePattern {
    pub psi: Vec<Complex64>,
}

impl PhasePattern {
    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn empty() -> Self {
        Self { psi: Vec::new() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
pub enum ProblemKind {
    P1,
    P2,
    P1Robust,
    P2Robust,
}

impl ProblemKind {
    pub fn is_robust(&self) -> bool {
        matches!(self, ProblemKind::P1Robust | ProblemKind::P2Robust)
    }

    pub fn has_min_snr(&self) -> bool {
        matches!(self, ProblemKind::P2 | ProblemKind::P2Robust)
    }
}

/// One attack instance over the effective SISO channels. UE 1 (index 0) is
/// the target; `min_snr[k-1]` and `epsilons[k]` refer to UE `k+1`.
#[derive(Debug, Clone)]
pub struct AttackProblem {
    pub kind: ProblemKind,
    /// Effective static scalars (estimates for robust kinds).
    pub h_s_eff: Vec<Complex64>,
    pub h_breve: Vec<Vec<Complex64>>,
    pub noise_power: f64,
    /// Minimum linear SNR for UEs 2..K (empty for single-UE kinds).
    pub min_snr: Vec<f64>,
    /// Error radii per UE (robust kinds only, empty otherwise).
    pub epsilons: Vec<f64>,
}

impl AttackProblem {
    pub fn num_ues(&self) -> usize {
        self.h_s_eff.len()
    }

    pub fn num_ris_elements(&self) -> usize {
        self.h_breve.first().map_or(0, |v| v.len())
    }

    pub fn validate(&self) -> Result<(), RisError> {
        let k = self.num_ues();
        if k == 0 || self.h_breve.len() != k {
            return Err(RisError::DimensionMismatch(
                "h_s_eff and h_breve must cover the same nonempty UE set".into(),
            ));
        }
        let n = self.num_ris_elements();
        if self.h_breve.iter().any(|v| v.len() != n) {
            return Err(RisError::DimensionMismatch("ragged h_breve".into()));
        }
        if !(self.noise_power > 0.0) {
            return Err(RisError::InvalidParameter("noise_power must be positive".into()));
        }
        if self.kind.has_min_snr() {
            if self.min_snr.len() != k - 1 {
                return Err(RisError::DimensionMismatch(format!(
                    "kind {:?} needs {} min-SNR levels, got {}",
                    self.kind,
                    k - 1,
                    self.min_snr.len()
                )));
            }
            if self.min_snr.iter().any(|g| *g < 0.0) {
                return Err(RisError::InvalidParameter("min_snr must be >= 0".into()));
            }
        }
        if self.kind.is_robust() {
            if self.epsilons.len() != k {
                return Err(RisError::DimensionMismatch(format!(
                    "kind {:?} needs {k} error radii, got {}",
                    self.kind,
                    self.epsilons.len()
                )));
            }
            if self.epsilons.iter().any(|e| *e < 0.0) {
                return Err(RisError::InvalidParameter("epsilons must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// Cascaded scalar `h_k = h_{s,k} + h_breve_k^H psi` at this problem's
    /// (possibly estimated) static scalars.
    pub fn cascaded(&self, ue: usize, psi: &[Complex64]) -> Complex64 {
        self.h_s_eff[ue]
            + self.h_breve[ue]
                .iter()
                .zip(psi)
                .map(|(b, p)| b.conj() * p)
                .sum::<Complex64>()
    }

    /// Largest amplitude in the channel data, used for normalization.
    fn amplitude_scale(&self) -> f64 {
        let mut s: f64 = 0.0;
        for k in 0..self.num_ues() {
            s = s.max(self.h_s_eff[k].norm());
            for b in &self.h_breve[k] {
                s = s.max(b.norm());
            }
        }
        s
    }

    fn scaled(&self, inv_amp: f64) -> AttackProblem {
        AttackProblem {
            kind: self.kind,
            h_s_eff: self.h_s_eff.iter().map(|h| h * inv_amp).collect(),
            h_breve: self
                .h_breve
                .iter()
                .map(|v| v.iter().map(|b| b * inv_amp).collect())
                .collect(),
            noise_power: self.noise_power * inv_amp * inv_amp,
            min_snr: self.min_snr.clone(),
            epsilons: self.epsilons.iter().map(|e| e * inv_amp).collect(),
        }
    }
}

/// Starting pattern policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum InitPolicy {
    /// I.i.d. uniform phases (default; restarts draw fresh patterns).
    #[default]
    RandomPhases,
    /// All-ones pattern (deterministic, restart-insensitive).
    Ones,
}

/// Penalty schedule and stopping parameters.
///
/// The initial weights are small relative to the unit-amplitude objective on
/// purpose: the first iterations then move essentially unconstrained toward
/// the destructive configuration and the growing weights only pull the
/// pattern back onto the unit-modulus circle.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CcpConfig {
    pub lambda0: f64,
    pub omega0: f64,
    /// Geometric growth factor of the penalty weights.
    pub mu: f64,
    pub lambda_max: f64,
    pub omega_max: f64,
    /// Stopping tolerance on slack norms and the step norm.
    pub nu: f64,
    pub max_outer_iters: usize,
    /// Random-phase restarts; the best converged run wins.
    pub restarts: usize,
    pub init: InitPolicy,
}

impl Default for CcpConfig {
    fn default() -> Self {
        Self {
            lambda0: 1e-3,
            omega0: 1e-3,
            mu: 1.5,
            lambda_max: 1e4,
            omega_max: 1e4,
            nu: 1e-3,
            max_outer_iters: 100,
            restarts: 1,
            init: InitPolicy::RandomPhases,
        }
    }
}

impl CcpConfig {
    pub fn validate(&self) -> Result<(), RisError> {
        if !(self.mu > 1.0) {
            return Err(RisError::InvalidParameter("mu must be > 1".into()));
        }
        if !(self.nu > 0.0) {
            return Err(RisError::InvalidParameter("nu must be > 0".into()));
        }
        if self.lambda_max < self.lambda0 || self.omega_max < self.omega0 {
            return Err(RisError::InvalidParameter(
                "penalty caps must be >= initial weights".into(),
            ));
        }
        if self.max_outer_iters == 0 || self.restarts == 0 {
            return Err(RisError::InvalidParameter(
                "max_outer_iters and restarts must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Per-iteration record of one CCP run. Objective values are in the
/// normalized (unit-amplitude) units of the subproblems.
#[derive(Debug, Clone)]
pub struct CcpIteration {
    pub objective: f64,
    pub d_norm: f64,
    pub t_norm: f64,
    pub step_norm: f64,
    pub lambda: f64,
    pub omega: f64,
    pub status: ConicStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIterations,
    SubproblemFailed(ConicStatus),
}

#[derive(Debug, Clone)]
pub struct CcpTrace {
    pub iterations: Vec<CcpIteration>,
    pub termination: Termination,
}

impl CcpTrace {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Auxiliary variables of the final robust subproblem, rescaled back to
/// physical (power) units.
#[derive(Debug, Clone)]
pub struct RobustAux {
    /// Epigraph of the worst-case target power.
    pub a: f64,
    /// Auxiliary split between nominal power and error budget.
    pub xi: f64,
    /// Final nominal target scalar `h_s_eff_1 + h_breve_1^H psi`.
    pub x_hat: Complex64,
    /// S-procedure multipliers per constrained UE (P2Robust only).
    pub alphas: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CcpRunResult {
    /// Finalized unit-modulus pattern.
    pub pattern: PhasePattern,
    /// Last iterate before unit-modulus projection.
    pub pre_projection_psi: Vec<Complex64>,
    pub trace: CcpTrace,
    pub robust_aux: Option<RobustAux>,
}

impl CcpRunResult {
    pub fn converged(&self) -> bool {
        self.trace.converged()
    }
}

/// Variable layout of one convexified subproblem.
#[derive(Debug, Clone)]
pub struct SubproblemLayout {
    pub psi: ComplexLift,
    /// 2N unit-modulus slacks.
    pub d_base: usize,
    /// Epigraph of `||d||`.
    pub s_d: usize,
    /// K-1 min-SNR slacks (P2 only).
    pub t_base: Option<usize>,
    pub s_t: Option<usize>,
    /// Epigraph of the rank-one objective (P1/P2).
    pub obj_epi: Option<usize>,
    /// Robust epigraph and auxiliary (robust kinds).
    pub a: Option<usize>,
    pub xi: Option<usize>,
    /// K-1 S-procedure multipliers (P2Robust).
    pub alpha_base: Option<usize>,
}

impl SubproblemLayout {
    pub fn extract_psi(&self, x: &[f64]) -> Vec<Complex64> {
        self.psi.unlift(x)
    }

    pub fn extract_d(&self, x: &[f64], n: usize) -> Vec<f64> {
        x[self.d_base..self.d_base + 2 * n].to_vec()
    }

    pub fn extract_t(&self, x: &[f64], k_minus_1: usize) -> Vec<f64> {
        match self.t_base {
            Some(base) => x[base..base + k_minus_1].to_vec(),
            None => vec![0.0; k_minus_1],
        }
    }
}

/// Stack `h_breve` over `conj(h_s_eff)` so that `R = u u^H` reproduces the
/// rank-one quadratic-form matrix and `u^H psi_hat = h_s + h_breve^H psi`.
pub fn rank_one_factor(h_s_eff: Complex64, h_breve: &[Complex64]) -> Vec<Complex64> {
    let mut u = h_breve.to_vec();
    u.push(h_s_eff.conj());
    u
}

/// `(|h_s| + sum_n |h_breve(n)|)^2 / sigma^2`: the optimum of the
/// rank-relaxed max-SNR program, attained by phase alignment.
pub fn max_aligned_snr(h_s_eff: Complex64, h_breve: &[Complex64], noise_power: f64) -> f64 {
    let amp = h_s_eff.norm() + h_breve.iter().map(|b| b.norm()).sum::<f64>();
    amp * amp / noise_power
}

/// `gamma_k = c * max_aligned_snr(k)` for k = 2..K.
pub fn compute_gamma(
    c: f64,
    h_s_eff: &[Complex64],
    h_breve: &[Vec<Complex64>],
    noise_power: f64,
) -> Result<Vec<f64>, RisError> {
    if !(c > 0.0 && c <= 1.0) {
        return Err(RisError::InvalidParameter(format!("c must be in (0,1], got {c}")));
    }
    Ok((1..h_s_eff.len())
        .map(|k| c * max_aligned_snr(h_s_eff[k], &h_breve[k], noise_power))
        .collect())
}

/// Normalize every entry to the unit circle. Errors on zero entries, whose
/// phase is ambiguous.
pub fn project_unit_modulus(psi: &[Complex64]) -> Result<PhasePattern, RisError> {
    let projected = psi
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let r = p.norm();
            if r == 0.0 {
                Err(RisError::ZeroMagnitude(i))
            } else {
                Ok(p / r)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PhasePattern { psi: projected })
}

/// Closed-form worst/best-case SNR over the error disk for a fixed pattern:
/// `((|x_hat| - eps)_+^2, (|x_hat| + eps)^2) / sigma^2`.
pub fn worst_case_snr_exact(x_hat: Complex64, eps: f64, noise_power: f64) -> (f64, f64) {
    let r = x_hat.norm();
    let lo = (r - eps).max(0.0);
    let hi = r + eps;
    (lo * lo / noise_power, hi * hi / noise_power)
}

/// Emit the convexified unit-modulus constraints around `psi_local`:
/// per element, `|psi_n|^2 <= 1 + d_n` (rotated SOC) and the linearized
/// reverse inequality `|psi_n^(r)|^2 - 2 Re(psi_n^* psi_n^(r)) <= d_{N+n} - 1`,
/// plus `d >= 0`.
pub fn unit_modulus_blocks(
    program: &mut ConicProgram,
    layout_psi: &ComplexLift,
    d_base: usize,
    psi_local: &[Complex64],
) {
    let n = layout_psi.len;
    for i in 0..n {
        let mut bound = LinExpr::var(d_base + i);
        bound.add_constant(1.0);
        program.add_sq_modulus_le(&layout_psi.entry(i), bound);

        let local = psi_local[i];
        // d_{N+n} - 1 - |psi_loc|^2 + 2 Re(psi^* psi_loc) >= 0
        let mut row = LinExpr::var(d_base + n + i);
        row.add_constant(-1.0 - local.norm_sqr());
        row.add_term(layout_psi.re_index(i), 2.0 * local.re);
        row.add_term(layout_psi.im_index(i), 2.0 * local.im);
        program.add_nonneg(row);
    }
    let d_rows: Vec<LinExpr> = (0..2 * n).map(|i| LinExpr::var(d_base + i)).collect();
    program.add_block(d_rows, Cone::Nonneg);
}

/// Emit the two 2x2 PSD blocks replacing the robust epigraph constraint:
/// `[[a - xi, x_hat], [x_hat^*, 1]] >= 0` and `[[xi, eps], [eps, 1]] >= 0`,
/// with `xi >= 0`.
pub fn nemirovski_blocks(
    program: &mut ConicProgram,
    a: usize,
    xi: usize,
    x_hat: &CxExpr,
    eps: f64,
) {
    program.hermitian_psd2x2_block(
        LinExpr::var(a).minus(&LinExpr::var(xi)),
        LinExpr::constant(1.0),
        x_hat.clone(),
    );
    program.hermitian_psd2x2_block(
        LinExpr::var(xi),
        LinExpr::constant(1.0),
        CxExpr::constant(Complex64::new(eps, 0.0)),
    );
    program.add_nonneg(LinExpr::var(xi));
}

/// Affine tail of the quadratic lower bound around `psi_local`:
/// `c_k = 2 Re((h_breve^H psi_local)^* (h_breve^H psi)) - |h_breve^H psi_local|^2`.
pub fn lemma2_constant(
    psi_expr: &ComplexLift,
    psi_local: &[Complex64],
    h_breve: &[Complex64],
) -> LinExpr {
    let v_local: Complex64 = h_breve
        .iter()
        .zip(psi_local)
        .map(|(b, p)| b.conj() * p)
        .sum();
    let v_expr = psi_expr.inner(h_breve, Complex64::new(0.0, 0.0));
    // 2 Re(conj(v_local) v_expr) - |v_local|^2
    let mut out = v_expr.re.scale(2.0 * v_local.re);
    out = out.plus(&v_expr.im.scale(2.0 * v_local.im));
    out.add_constant(-v_local.norm_sqr());
    out
}

/// Evaluate the assembled quadratic lower bound of `|h_s + h_breve^H psi|^2`
/// around `psi_local` at a concrete `psi` (test oracle for the linearization).
pub fn lemma2_bound_value(
    h_s: Complex64,
    h_breve: &[Complex64],
    psi: &[Complex64],
    psi_local: &[Complex64],
) -> f64 {
    let v = |p: &[Complex64]| -> Complex64 {
        h_breve.iter().zip(p).map(|(b, q)| b.conj() * q).sum()
    };
    let w = h_s + v(psi);
    let w_local = h_s + v(psi_local);
    // |w_local|^2 + 2 Re(w_local^* (w - w_local)) rearranged
    2.0 * (w_local.conj() * w).re - w_local.norm_sqr()
}

/// Emit the S-procedure PSD block for one constrained UE:
/// `[[1 + alpha, x_hat], [x_hat^*, f_k - gamma sigma^2 - alpha eps^2]] >= 0`
/// with `alpha >= 0`. `f_k` must be the assembled affine lower-bound tail.
pub fn sprocedure_block(
    program: &mut ConicProgram,
    alpha: usize,
    x_hat: &CxExpr,
    f_k: &LinExpr,
    gamma_noise: f64,
    eps: f64,
) {
    let mut corner = f_k.clone();
    corner.add_constant(-gamma_noise);
    corner.add_term(alpha, -eps * eps);
    let mut top = LinExpr::var(alpha);
    top.add_constant(1.0);
    program.hermitian_psd2x2_block(top, corner, x_hat.clone());
    program.add_nonneg(LinExpr::var(alpha));
}

/// Assemble the convexified subproblem of the given kind around `psi_local`.
/// The channel data in `problem` is used as-is; callers that want the
/// documented normalization should pass a rescaled problem (as
/// [`run_algorithm1`] does).
pub fn build_subproblem(
    problem: &AttackProblem,
    psi_local: &[Complex64],
    lambda: f64,
    omega: f64,
) -> Result<(ConicProgram, SubproblemLayout), RisError> {
    problem.validate()?;
    let n = problem.num_ris_elements();
    if psi_local.len() != n {
        return Err(RisError::DimensionMismatch(format!(
            "psi_local has length {}, expected {n}",
            psi_local.len()
        )));
    }
    if !(lambda > 0.0) || !(omega > 0.0) {
        return Err(RisError::InvalidParameter("penalty weights must be positive".into()));
    }
    let k_ues = problem.num_ues();

    let mut program = ConicProgram::new();
    let psi = program.lift_complex(n);
    let d_base = program.new_vars(2 * n);
    let s_d = program.new_var();

    unit_modulus_blocks(&mut program, &psi, d_base, psi_local);

    // ||d|| epigraph, weighted into the objective
    let mut d_soc = vec![LinExpr::var(s_d)];
    d_soc.extend((0..2 * n).map(|i| LinExpr::var(d_base + i)));
    program.add_block(d_soc, Cone::Soc);
    program.add_objective_term(s_d, lambda);

    let mut layout = SubproblemLayout {
        psi,
        d_base,
        s_d,
        t_base: None,
        s_t: None,
        obj_epi: None,
        a: None,
        xi: None,
        alpha_base: None,
    };

    // target-UE scalar as a complex affine expression (psi_hat last entry
    // is substituted to 1, so the static scalar enters as the constant)
    let w1 = psi.inner(&problem.h_breve[0], problem.h_s_eff[0]);

    match problem.kind {
        ProblemKind::P1 | ProblemKind::P2 => {
            let q = program.new_var();
            program.add_sq_modulus_le(&w1, LinExpr::var(q));
            program.add_objective_term(q, 1.0);
            layout.obj_epi = Some(q);

            if problem.kind == ProblemKind::P2 {
                let t_base = program.new_vars(k_ues - 1);
                let s_t = program.new_var();
                for k in 1..k_ues {
                    let t_k = t_base + (k - 1);
                    let gamma_noise = problem.min_snr[k - 1] * problem.noise_power;
                    let w_local = problem.cascaded(k, psi_local);
                    let w_expr = psi.inner(&problem.h_breve[k], problem.h_s_eff[k]);
                    // t_k - gamma sigma^2 - |w_local|^2 + 2 Re(w_local^* w) >= 0
                    let mut row = LinExpr::var(t_k);
                    row.add_constant(-gamma_noise - w_local.norm_sqr());
                    row = row.plus(&w_expr.re.scale(2.0 * w_local.re));
                    row = row.plus(&w_expr.im.scale(2.0 * w_local.im));
                    program.add_nonneg(row);
                    program.add_nonneg(LinExpr::var(t_k));
                }
                let mut t_soc = vec![LinExpr::var(s_t)];
                t_soc.extend((0..k_ues - 1).map(|i| LinExpr::var(t_base + i)));
                program.add_block(t_soc, Cone::Soc);
                program.add_objective_term(s_t, omega);
                layout.t_base = Some(t_base);
                layout.s_t = Some(s_t);
            }
        }
        ProblemKind::P1Robust | ProblemKind::P2Robust => {
            let a = program.new_var();
            let xi = program.new_var();
            program.add_objective_term(a, 1.0);
            program.add_nonneg(LinExpr::var(a));
            nemirovski_blocks(&mut program, a, xi, &w1, problem.epsilons[0]);
            layout.a = Some(a);
            layout.xi = Some(xi);

            if problem.kind == ProblemKind::P2Robust {
                let alpha_base = program.new_vars(k_ues - 1);
                for k in 1..k_ues {
                    let alpha = alpha_base + (k - 1);
                    let gamma_noise = problem.min_snr[k - 1] * problem.noise_power;
                    let h_hat = problem.h_s_eff[k];
                    let v_expr = psi.inner(&problem.h_breve[k], Complex64::new(0.0, 0.0));
                    // f_k = |h_hat|^2 + 2 Re(h_hat^* v) + c_k
                    let mut f_k = LinExpr::constant(h_hat.norm_sqr());
                    f_k = f_k.plus(&v_expr.re.scale(2.0 * h_hat.re));
                    f_k = f_k.plus(&v_expr.im.scale(2.0 * h_hat.im));
                    f_k = f_k.plus(&lemma2_constant(&psi, psi_local, &problem.h_breve[k]));
                    let x_hat_k = psi.inner(&problem.h_breve[k], h_hat);
                    sprocedure_block(
                        &mut program,
                        alpha,
                        &x_hat_k,
                        &f_k,
                        gamma_noise,
                        problem.epsilons[k],
                    );
                }
                layout.alpha_base = Some(alpha_base);
            }
        }
    }

    Ok((program, layout))
}

/// Draw a uniform-random-phase initial pattern.
pub fn random_init<R: Rng>(n: usize, rng: &mut R) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)))
        .collect()
}

/// One run of the penalty-CCP loop from a given starting pattern.
pub fn run_algorithm1_from(
    problem: &AttackProblem,
    config: &CcpConfig,
    psi0: Vec<Complex64>,
) -> Result<CcpRunResult, RisError> {
    problem.validate()?;
    config.validate()?;
    let n = problem.num_ris_elements();
    if psi0.len() != n {
        return Err(RisError::DimensionMismatch("psi0 length mismatch".into()));
    }
    if n == 0 {
        return Ok(CcpRunResult {
            pattern: PhasePattern::empty(),
            pre_projection_psi: Vec::new(),
            trace: CcpTrace { iterations: Vec::new(), termination: Termination::Converged },
            robust_aux: None,
        });
    }

    let amp = problem.amplitude_scale();
    if amp == 0.0 {
        // all channels vanish; any pattern is optimal
        return Ok(CcpRunResult {
            pattern: project_unit_modulus(&psi0)?,
            pre_projection_psi: psi0,
            trace: CcpTrace { iterations: Vec::new(), termination: Termination::Converged },
            robust_aux: None,
        });
    }
    let scaled = problem.scaled(1.0 / amp);
    let k_ues = problem.num_ues();

    let mut psi_prev = psi0;
    let mut lambda = config.lambda0;
    let mut omega = config.omega0;
    let mut iterations = Vec::new();
    let mut termination = Termination::MaxIterations;
    let mut last_solution: Option<(Vec<f64>, SubproblemLayout)> = None;

    for _ in 0..config.max_outer_iters {
        let (program, layout) = build_subproblem(&scaled, &psi_prev, lambda, omega)?;
        let sol = program.solve(SolveTolerances::default())?;
        if sol.status != ConicStatus::Optimal {
            iterations.push(CcpIteration {
                objective: sol.objective_value,
                d_norm: f64::NAN,
                t_norm: f64::NAN,
                step_norm: f64::NAN,
                lambda,
                omega,
                status: sol.status,
            });
            termination = Termination::SubproblemFailed(sol.status);
            break;
        }

        let psi_new = layout.extract_psi(&sol.x);
        let d = layout.extract_d(&sol.x, n);
        let t = layout.extract_t(&sol.x, k_ues - 1);
        let d_norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        let t_norm = t.iter().map(|v| v * v).sum::<f64>().sqrt();
        let step_norm = psi_new
            .iter()
            .zip(&psi_prev)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        iterations.push(CcpIteration {
            objective: sol.objective_value,
            d_norm,
            t_norm,
            step_norm,
            lambda,
            omega,
            status: sol.status,
        });

        lambda = (config.mu * lambda).min(config.lambda_max);
        if problem.kind == ProblemKind::P2 {
            omega = (config.mu * omega).min(config.omega_max);
        }

        psi_prev = psi_new;
        last_solution = Some((sol.x, layout));

        if d_norm <= config.nu && step_norm <= config.nu && t_norm <= config.nu {
            termination = Termination::Converged;
            break;
        }
    }

    let robust_aux = if problem.kind.is_robust() {
        last_solution.as_ref().map(|(x, layout)| {
            let x_hat = scaled.cascaded(0, &layout.extract_psi(x)) * amp;
            RobustAux {
                a: x[layout.a.unwrap()] * amp * amp,
                xi: x[layout.xi.unwrap()] * amp * amp,
                x_hat,
                alphas: layout
                    .alpha_base
                    .map(|base| x[base..base + k_ues - 1].to_vec())
                    .unwrap_or_default(),
            }
        })
    } else {
        None
    };

    let pattern = project_unit_modulus(&psi_prev)?;
    Ok(CcpRunResult {
        pattern,
        pre_projection_psi: psi_prev,
        trace: CcpTrace { iterations, termination },
        robust_aux,
    })
}

/// Algorithm 1 with the configured initial pattern.
pub fn run_algorithm1<R: Rng>(
    problem: &AttackProblem,
    config: &CcpConfig,
    rng: &mut R,
) -> Result<CcpRunResult, RisError> {
    let n = problem.num_ris_elements();
    let psi0 = match config.init {
        InitPolicy::RandomPhases => random_init(n, rng),
        InitPolicy::Ones => vec![Complex64::new(1.0, 0.0); n],
    };
    run_algorithm1_from(problem, config, psi0)
}

/// Run `config.restarts` random restarts and keep the best: the converged
/// run with the lowest achieved target power (falling back to the lowest
/// final subproblem objective if none converged).
pub fn run_algorithm1_restarts<R: Rng>(
    problem: &AttackProblem,
    config: &CcpConfig,
    rng: &mut R,
) -> Result<CcpRunResult, RisError> {
    let mut best: Option<CcpRunResult> = None;
    for _ in 0..config.restarts.max(1) {
        let run = run_algorithm1(problem, config, rng)?;
        best = Some(match best.take() {
            None => run,
            Some(cur) => {
                if pick_better(problem, &run, &cur) {
                    run
                } else {
                    cur
                }
            }
        });
    }
    Ok(best.expect("at least one restart"))
}

fn attack_metric(problem: &AttackProblem, run: &CcpRunResult) -> f64 {
    if run.pattern.is_empty() {
        return problem.h_s_eff[0].norm_sqr();
    }
    let nominal = problem.cascaded(0, &run.pattern.psi).norm_sqr();
    if problem.kind.is_robust() {
        let eps = problem.epsilons[0];
        let r = problem.cascaded(0, &run.pattern.psi).norm() + eps;
        r * r
    } else {
        nominal
    }
}

fn pick_better(problem: &AttackProblem, candidate: &CcpRunResult, current: &CcpRunResult) -> bool {
    match (candidate.converged(), current.converged()) {
        (true, false) => true,
        (false, true) => false,
        _ => attack_metric(problem, candidate) < attack_metric(problem, current),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn cx(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
        Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
    }

    fn random_phases(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)))
            .collect()
    }

    fn p1_problem(h_s: Complex64, h_breve: Vec<Complex64>) -> AttackProblem {
        AttackProblem {
            kind: ProblemKind::P1,
            h_s_eff: vec![h_s],
            h_breve: vec![h_breve],
            noise_power: 1.0,
            min_snr: vec![],
            epsilons: vec![],
        }
    }

    #[test]
    fn rank_one_factor_reproduces_quadratic_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        // N = 1 toy case: R = [[1, 1], [1, 1]], ||u||^2 = 2
        let u = rank_one_factor(Complex64::new(1.0, 0.0), &[Complex64::new(1.0, 0.0)]);
        assert_eq!(u.len(), 2);
        let norm_sq: f64 = u.iter().map(|c| c.norm_sqr()).sum();
        assert_abs_diff_eq!(norm_sq, 2.0, epsilon = 1e-14);

        for _ in 0..100 {
            let n = rng.gen_range(1..6);
            let h_s = cx(&mut rng, 1.0);
            let h_breve: Vec<Complex64> = (0..n).map(|_| cx(&mut rng, 1.0)).collect();
            let u = rank_one_factor(h_s, &h_breve);
            // R entries vs u u^H
            for i in 0..=n {
                for j in 0..=n {
                    let r_ij = if i < n && j < n {
                        h_breve[i] * h_breve[j].conj()
                    } else if i < n {
                        h_breve[i] * h_s
                    } else if j < n {
                        h_s.conj() * h_breve[j].conj()
                    } else {
                        Complex64::new(h_s.norm_sqr(), 0.0)
                    };
                    let uu = u[i] * u[j].conj();
                    assert!((r_ij - uu).norm() <= 1e-14);
                }
            }
            // quadratic form vs direct squared modulus
            let psi = random_phases(&mut rng, n);
            let mut psi_hat = psi.clone();
            psi_hat.push(Complex64::new(1.0, 0.0));
            let quad: Complex64 = {
                let inner: Complex64 =
                    u.iter().zip(&psi_hat).map(|(ui, pi)| ui.conj() * pi).sum();
                inner * inner.conj()
            };
            let direct = (h_s
                + h_breve
                    .iter()
                    .zip(&psi)
                    .map(|(b, p)| b.conj() * p)
                    .sum::<Complex64>())
            .norm_sqr();
            assert!((quad.re - direct).abs() <= 1e-12 * (1.0 + direct));
        }
    }

    #[test]
    fn taylor_linearization_underestimates_modulus() {
        // |psi_loc|^2 - 2 Re(psi^* psi_loc) >= -|psi|^2 for all pairs
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        for _ in 0..1000 {
            let p = cx(&mut rng, 2.0);
            let q = cx(&mut rng, 2.0);
            let lin = q.norm_sqr() - 2.0 * (p.conj() * q).re;
            assert!(lin + p.norm_sqr() >= -1e-12);
        }
    }

    #[test]
    fn max_aligned_snr_examples() {
        assert_abs_diff_eq!(
            max_aligned_snr(Complex64::new(1.0, 0.0), &[], 1.0),
            1.0,
            epsilon = 1e-14
        );
        let two = [Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        assert_abs_diff_eq!(
            max_aligned_snr(Complex64::new(1.0, 0.0), &two, 1.0),
            9.0,
            epsilon = 1e-12
        );
        let hs = Complex64::from_polar(2.0, PI / 3.0);
        let hb = [Complex64::from_polar(3.0, -PI / 7.0)];
        assert_abs_diff_eq!(max_aligned_snr(hs, &hb, 1.0), 25.0, epsilon = 1e-12);
    }

    #[test]
    fn max_aligned_snr_vs_phase_grid() {
        // 64-point grid per element cannot beat the aligned closed form
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let h_s = cx(&mut rng, 1.0);
        let h_breve: Vec<Complex64> = (0..2).map(|_| cx(&mut rng, 1.0)).collect();
        let closed = max_aligned_snr(h_s, &h_breve, 1.0);
        let mut best = 0.0f64;
        for i in 0..64 {
            for j in 0..64 {
                let psi = [
                    Complex64::from_polar(1.0, 2.0 * PI * i as f64 / 64.0),
                    Complex64::from_polar(1.0, 2.0 * PI * j as f64 / 64.0),
                ];
                let h = h_s
                    + h_breve
                        .iter()
                        .zip(&psi)
                        .map(|(b, p)| b.conj() * p)
                        .sum::<Complex64>();
                best = best.max(h.norm_sqr());
            }
        }
        assert!(best <= closed + 1e-9);
        assert!(best >= closed * (1.0 - 1e-2), "grid max {best} far below {closed}");
    }

    #[test]
    fn gamma_scaling() {
        let h_s = vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)];
        let h_b = vec![
            vec![Complex64::new(1.0, 0.0); 2],
            vec![Complex64::new(1.0, 0.0); 2],
        ];
        let full = compute_gamma(1.0, &h_s, &h_b, 1.0).unwrap();
        assert_abs_diff_eq!(full[0], 9.0, epsilon = 1e-12);
        let g = compute_gamma(0.9, &h_s, &h_b, 1.0).unwrap();
        assert_abs_diff_eq!(g[0], 8.1, epsilon = 1e-12);
        assert!(compute_gamma(0.0, &h_s, &h_b, 1.0).is_err());
    }

    #[test]
    fn nemirovski_minimal_epigraph() {
        // minimize a subject to the two blocks with fixed x_hat
        let minimal_a = |x_hat: Complex64, eps: f64| -> f64 {
            let mut p = ConicProgram::new();
            let a = p.new_var();
            let xi = p.new_var();
            p.add_objective_term(a, 1.0);
            nemirovski_blocks(&mut p, a, xi, &CxExpr::constant(x_hat), eps);
            let sol = p.solve(SolveTolerances::default()).unwrap();
            assert_eq!(sol.status, ConicStatus::Optimal);
            sol.objective_value
        };
        // eps = 0: minimal a = |x_hat|^2
        assert_abs_diff_eq!(minimal_a(Complex64::new(1.5, -0.5), 0.0), 2.5, epsilon = 1e-6);
        // x_hat = 0, eps = 1: xi >= 1 forces a >= 1
        assert_abs_diff_eq!(minimal_a(Complex64::new(0.0, 0.0), 1.0), 1.0, epsilon = 1e-6);
        // generally a >= |x_hat|^2 + eps^2
        let a = minimal_a(Complex64::new(0.8, 0.3), 0.4);
        assert_abs_diff_eq!(a, 0.8f64 * 0.8 + 0.3 * 0.3 + 0.16, epsilon = 1e-6);
    }

    #[test]
    fn lemma2_bound_tight_at_expansion_point_and_below_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        for _ in 0..200 {
            let n = rng.gen_range(1..5);
            let h_s = cx(&mut rng, 1.0);
            let h_breve: Vec<Complex64> = (0..n).map(|_| cx(&mut rng, 1.0)).collect();
            let psi_local = random_phases(&mut rng, n);
            // tight at the expansion point
            let truth_local = {
                let v: Complex64 = h_breve
                    .iter()
                    .zip(&psi_local)
                    .map(|(b, p)| b.conj() * p)
                    .sum();
                (h_s + v).norm_sqr()
            };
            let at_local = lemma2_bound_value(h_s, &h_breve, &psi_local, &psi_local);
            assert_abs_diff_eq!(at_local, truth_local, epsilon = 1e-12);
            // never exceeds the truth
            for _ in 0..50 {
                let psi = random_phases(&mut rng, n);
                let v: Complex64 =
                    h_breve.iter().zip(&psi).map(|(b, p)| b.conj() * p).sum();
                let truth = (h_s + v).norm_sqr();
                let bound = lemma2_bound_value(h_s, &h_breve, &psi, &psi_local);
                assert!(bound <= truth + 1e-10);
            }
        }
    }

    #[test]
    fn lemma2_constant_matches_direct_expression() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let n = 3;
        let h_breve: Vec<Complex64> = (0..n).map(|_| cx(&mut rng, 1.0)).collect();
        let psi_local = random_phases(&mut rng, n);
        let mut program = ConicProgram::new();
        let lift = program.lift_complex(n);
        let c_expr = lemma2_constant(&lift, &psi_local, &h_breve);
        for _ in 0..50 {
            let psi = random_phases(&mut rng, n);
            let mut x = vec![0.0; 2 * n];
            for (i, p) in psi.iter().enumerate() {
                x[lift.re_index(i)] = p.re;
                x[lift.im_index(i)] = p.im;
            }
            let v = |p: &[Complex64]| -> Complex64 {
                h_breve.iter().zip(p).map(|(b, q)| b.conj() * q).sum()
            };
            let expect = 2.0 * (v(&psi_local).conj() * v(&psi)).re - v(&psi_local).norm_sqr();
            assert_abs_diff_eq!(c_expr.eval(&x), expect, epsilon = 1e-12);
        }
    }

    #[test]
    fn sprocedure_certifies_worst_case_over_disk() {
        // pick a feasible (psi fixed, alpha from a feasibility solve) and
        // sample the error disk
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let n = 4;
        let h_hat = Complex64::new(1.0, 0.2);
        let h_breve: Vec<Complex64> = (0..n).map(|_| cx(&mut rng, 0.6)).collect();
        let psi = {
            // co-phase for large |h|
            let pattern: Vec<Complex64> = h_breve
                .iter()
                .map(|b| Complex64::from_polar(1.0, (h_hat.arg()) + b.arg()))
                .collect();
            pattern
        };
        let eps = 0.3;
        let gamma_noise = 0.5; // modest requirement
        // alpha via a 1-variable feasibility solve at fixed psi
        let mut program = ConicProgram::new();
        let alpha = program.new_var();
        program.add_objective_term(alpha, 1.0);
        let v: Complex64 = h_breve.iter().zip(&psi).map(|(b, p)| b.conj() * p).sum();
        let x_hat = v + h_hat;
        // with psi fixed and local = psi, f_k equals |x_hat|^2
        let f_k = LinExpr::constant(x_hat.norm_sqr());
        sprocedure_block(
            &mut program,
            alpha,
            &CxExpr::constant(x_hat),
            &f_k,
            gamma_noise,
            eps,
        );
        let sol = program.solve(SolveTolerances::default()).unwrap();
        assert_eq!(sol.status, ConicStatus::Optimal);
        // sampled lower bound stays above gamma sigma^2
        for _ in 0..1000 {
            let delta = crate::channel::draw_static_error(eps, &mut rng);
            let bound = delta.norm_sqr() + 2.0 * (x_hat.conj() * delta).re + x_hat.norm_sqr();
            assert!(bound >= gamma_noise - 1e-7);
        }
    }

    #[test]
    fn p1_single_element_reaches_phase_opposition() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..5 {
            let h_s = cx(&mut rng, 1.0);
            let h_b = cx(&mut rng, 0.4);
            let problem = p1_problem(h_s, vec![h_b]);
            let run = run_algorithm1(&problem, &CcpConfig::default(), &mut rng).unwrap();
            assert!(run.converged(), "termination {:?}", run.trace.termination);
            let achieved = problem.cascaded(0, &run.pattern.psi).norm();
            // on the unit circle the single reflected term has fixed modulus,
            // so the best is full phase opposition
            let analytic = (h_s.norm() - h_b.norm()).abs();
            assert!(
                (achieved - analytic).abs() <= 1e-3 * (1.0 + analytic),
                "achieved {achieved} vs analytic {analytic}"
            );
        }
    }

    #[test]
    fn n_zero_is_degenerate() {
        let problem = p1_problem(Complex64::new(1.0, 0.0), vec![]);
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        let run = run_algorithm1(&problem, &CcpConfig::default(), &mut rng).unwrap();
        assert!(run.pattern.is_empty());
        assert!(run.converged());
    }

    #[test]
    fn p1_two_elements_beats_phase_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let h_s = Complex64::new(1.0, 0.3);
        let h_breve: Vec<Complex64> = (0..2).map(|_| cx(&mut rng, 0.25)).collect();
        let problem = p1_problem(h_s, h_breve.clone());
        let config = CcpConfig { restarts: 3, ..Default::default() };
        let run = run_algorithm1_restarts(&problem, &config, &mut rng).unwrap();
        assert!(run.converged());
        let achieved = problem.cascaded(0, &run.pattern.psi).norm_sqr();
        let mut grid_best = f64::INFINITY;
        for i in 0..256 {
            for j in 0..256 {
                let psi = [
                    Complex64::from_polar(1.0, 2.0 * PI * i as f64 / 256.0),
                    Complex64::from_polar(1.0, 2.0 * PI * j as f64 / 256.0),
                ];
                grid_best = grid_best.min(problem.cascaded(0, &psi).norm_sqr());
            }
        }
        // within 0.2 dB of the exhaustive grid
        let achieved_db = 10.0 * achieved.log10();
        let grid_db = 10.0 * grid_best.log10();
        assert!(achieved_db <= grid_db + 0.2, "{achieved_db} dB vs grid {grid_db} dB");
    }

    #[test]
    fn p2_with_zero_gamma_matches_p1() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let h_s = vec![cx(&mut rng, 1.0), cx(&mut rng, 1.0)];
        let h_b: Vec<Vec<Complex64>> = (0..2)
            .map(|_| (0..3).map(|_| cx(&mut rng, 0.3)).collect())
            .collect();
        let p1 = AttackProblem {
            kind: ProblemKind::P1,
            h_s_eff: vec![h_s[0]],
            h_breve: vec![h_b[0].clone()],
            noise_power: 1.0,
            min_snr: vec![],
            epsilons: vec![],
        };
        let p2 = AttackProblem {
            kind: ProblemKind::P2,
            h_s_eff: h_s.clone(),
            h_breve: h_b.clone(),
            noise_power: 1.0,
            min_snr: vec![0.0],
            epsilons: vec![],
        };
        let init = random_phases(&mut rng, 3);
        let cfg = CcpConfig::default();
        let r1 = run_algorithm1_from(&p1, &cfg, init.clone()).unwrap();
        let r2 = run_algorithm1_from(&p2, &cfg, init).unwrap();
        assert!(r1.converged() && r2.converged());
        let v1 = p1.cascaded(0, &r1.pattern.psi).norm_sqr();
        let v2 = p2.cascaded(0, &r2.pattern.psi).norm_sqr();
        assert!((v1 - v2).abs() <= 1e-3 * (1.0 + v1), "P1 {v1} vs P2(gamma=0) {v2}");
    }

    #[test]
    fn robust_with_zero_eps_matches_p1() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let h_s = cx(&mut rng, 1.0);
        let h_b: Vec<Complex64> = (0..3).map(|_| cx(&mut rng, 0.3)).collect();
        let p1 = p1_problem(h_s, h_b.clone());
        let p1r = AttackProblem {
            kind: ProblemKind::P1Robust,
            h_s_eff: vec![h_s],
            h_breve: vec![h_b],
            noise_power: 1.0,
            min_snr: vec![],
            epsilons: vec![0.0],
        };
        let init = random_phases(&mut rng, 3);
        let cfg = CcpConfig::default();
        let r1 = run_algorithm1_from(&p1, &cfg, init.clone()).unwrap();
        let rr = run_algorithm1_from(&p1r, &cfg, init).unwrap();
        assert!(r1.converged() && rr.converged());
        let v1 = p1.cascaded(0, &r1.pattern.psi).norm_sqr();
        let vr = p1r.cascaded(0, &rr.pattern.psi).norm_sqr();
        assert!((v1 - vr).abs() <= 1e-3 * (1.0 + v1), "P1 {v1} vs P1' (eps=0) {vr}");
    }

    #[test]
    fn robust_epigraph_dominates_nominal_plus_eps_sq() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let h_s = cx(&mut rng, 1.0);
        let h_b: Vec<Complex64> = (0..4).map(|_| cx(&mut rng, 0.2)).collect();
        let eps = 0.2 * h_s.norm();
        let problem = AttackProblem {
            kind: ProblemKind::P1Robust,
            h_s_eff: vec![h_s],
            h_breve: vec![h_b],
            noise_power: 1.0,
            min_snr: vec![],
            epsilons: vec![eps],
        };
        let run = run_algorithm1(&problem, &CcpConfig::default(), &mut rng).unwrap();
        assert!(run.converged());
        let aux = run.robust_aux.unwrap();
        // determinant inequalities of the two blocks chain to this
        // (up to solver feasibility tolerance)
        assert!(aux.a + 1e-6 >= aux.x_hat.norm_sqr() + eps * eps);
        assert!(aux.xi + 1e-6 >= eps * eps);
    }

    #[test]
    fn fixed_weight_iterations_descend() {
        // start at the caps so every consecutive pair shares (lambda, omega)
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let h_s = Complex64::new(1.0, 0.0);
        let h_b: Vec<Complex64> = (0..4).map(|_| cx(&mut rng, 0.3)).collect();
        let problem = p1_problem(h_s, h_b);
        let cfg = CcpConfig {
            lambda0: 20.0,
            omega0: 20.0,
            lambda_max: 20.0,
            omega_max: 20.0,
            ..Default::default()
        };
        let run = run_algorithm1(&problem, &cfg, &mut rng).unwrap();
        let objs: Vec<f64> = run.trace.iterations.iter().map(|i| i.objective).collect();
        assert!(objs.len() >= 2);
        for pair in objs.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-6 * (1.0 + pair[0].abs()),
                "objective increased: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn projection_examples() {
        let p = project_unit_modulus(&[Complex64::new(2.0, 0.0), Complex64::new(0.0, -3.0)])
            .unwrap();
        assert_abs_diff_eq!((p.psi[0] - Complex64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((p.psi[1] - Complex64::new(0.0, -1.0)).norm(), 0.0, epsilon = 1e-15);
        // fixed point on already-unit input
        let q = project_unit_modulus(&p.psi).unwrap();
        assert_eq!(q.psi, p.psi);
        assert!(project_unit_modulus(&[Complex64::new(0.0, 0.0)]).is_err());
    }

    #[test]
    fn worst_case_snr_examples_and_sampling() {
        let (lo, hi) = worst_case_snr_exact(Complex64::new(3.0, 0.0), 1.0, 1.0);
        assert_abs_diff_eq!(lo, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(hi, 16.0, epsilon = 1e-12);
        let (lo2, _) = worst_case_snr_exact(Complex64::new(0.5, 0.0), 2.0, 1.0);
        assert_eq!(lo2, 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let x_hat = Complex64::new(0.8, -0.4);
        let eps = 0.35;
        let (lo, hi) = worst_case_snr_exact(x_hat, eps, 1.0);
        for _ in 0..100_000 {
            let delta = crate::channel::draw_static_error(eps, &mut rng);
            let s = (x_hat + delta).norm_sqr();
            assert!(s >= lo - 1e-12 && s <= hi + 1e-12);
        }
        // boundary-aligned errors attain the extremes
        let dir = x_hat / x_hat.norm();
        let s_hi = (x_hat + eps * dir).norm_sqr();
        let s_lo = (x_hat - eps * dir).norm_sqr();
        assert_abs_diff_eq!(s_hi, hi, epsilon = 1e-9);
        assert_abs_diff_eq!(s_lo, lo, epsilon = 1e-9);
    }
}
