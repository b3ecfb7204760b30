//! Closed-form destructive attack for constant-magnitude (LoS) reflected
//! channels, built on the Dirichlet array-factor ratio.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::ccp::PhasePattern;

/// A constant-magnitude single-UE instance: the reflected path is
/// `rho_r * [e^{j ang(1)}, ..., e^{j ang(N)}]` and the static path is
/// `|h_s| e^{j ang(h_s)}`.
#[derive(Debug, Clone)]
pub struct LosInstance {
    pub h_s_mag: f64,
    pub h_s_phase: f64,
    pub rho_r: f64,
    /// Per-element reflected-path phases `ang(h_breve(n))`.
    pub element_phases: Vec<f64>,
    pub noise_power: f64,
}

impl LosInstance {
    pub fn n(&self) -> usize {
        self.element_phases.len()
    }

    pub fn h_s(&self) -> Complex64 {
        Complex64::from_polar(self.h_s_mag, self.h_s_phase)
    }

    pub fn h_breve(&self) -> Vec<Complex64> {
        self.element_phases
            .iter()
            .map(|&p| Complex64::from_polar(self.rho_r, p))
            .collect()
    }

    /// Cascaded scalar `h_s + h_breve^H psi` evaluated directly.
    pub fn cascaded(&self, psi: &[Complex64]) -> Complex64 {
        self.h_s()
            + self
                .h_breve()
                .iter()
                .zip(psi)
                .map(|(b, p)| b.conj() * p)
                .sum::<Complex64>()
    }
}

/// `sin(N xi / 2) / sin(xi / 2)` with the removable singularity at
/// `xi = 0 (mod 2 pi)` evaluated by continuity (`+-N`).
pub fn dirichlet_ratio(n: usize, xi: f64) -> f64 {
    let half = xi / 2.0;
    let denom = half.sin();
    if denom.abs() < 1e-9 {
        // limit by l'Hopital: N cos(N xi / 2) / cos(xi / 2)
        n as f64 * (n as f64 * half).cos() / half.cos()
    } else {
        (n as f64 * half).sin() / denom
    }
}

/// Phase pattern `ang(psi_n) = ang(h_s) + ang(h_breve(n)) + (n - (N+1)/2) xi + pi`.
///
/// Because psi multiplies `h_breve^H` (conjugated), these phases make the
/// reflected sum exactly `-rho_r D_N(xi) e^{j ang(h_s)}`, so the cascaded
/// magnitude is `| |h_s| - rho_r D_N(xi) |`.
pub fn lemma1_pattern(instance: &LosInstance, xi: f64) -> PhasePattern {
    let n = instance.n();
    let psi = instance
        .element_phases
        .iter()
        .enumerate()
        .map(|(idx, &elem_phase)| {
            let pos = (idx + 1) as f64 - (n as f64 + 1.0) / 2.0;
            Complex64::from_polar(1.0, instance.h_s_phase + elem_phase + pos * xi + PI)
        })
        .collect();
    PhasePattern { psi }
}

/// Cascaded magnitude predicted by the closed form at a given `xi`.
pub fn lemma1_magnitude(instance: &LosInstance, xi: f64) -> f64 {
    (instance.h_s_mag - instance.rho_r * dirichlet_ratio(instance.n(), xi)).abs()
}

/// Best angular parameter and the resulting SNR.
///
/// If `|h_s| >= N rho_r` the optimum is `xi = 0` with
/// `SNR = (|h_s| - N rho_r)^2 / sigma^2`; otherwise a root of
/// `rho_r D_N(xi) = |h_s|` inside the first Dirichlet lobe `(0, 2 pi / N)`
/// nullifies the SNR. Root finding is bisection to `|f| <= 1e-12`.
pub fn lemma1_best(instance: &LosInstance) -> (f64, f64) {
    let n = instance.n();
    let nf = n as f64;
    let peak = nf * instance.rho_r;
    if instance.h_s_mag >= peak {
        let resid = instance.h_s_mag - peak;
        return (0.0, resid * resid / instance.noise_power);
    }
    // bracket: f(xi) = rho_r D_N(xi) - |h_s| is positive at 0+ and negative
    // at 2 pi / N where D_N vanishes
    let f = |xi: f64| instance.rho_r * dirichlet_ratio(n, xi) - instance.h_s_mag;
    let mut lo = 0.0;
    let mut hi = 2.0 * PI / nf;
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() <= 1e-12 {
            break;
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let resid = f(mid).abs();
    (mid, resid * resid / instance.noise_power)
}
