//! Reference phase-shift policies: random phases, MRT toward UE 2, no RIS.

use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

use crate::ccp::PhasePattern;
use crate::error::RisError;

/// I.i.d. uniform phases on the unit circle.
pub fn random_pattern<R: Rng>(n: usize, rng: &mut R) -> PhasePattern {
    PhasePattern {
        psi: (0..n)
            .map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI)))
            .collect(),
    }
}

/// Co-phase the RIS to UE 2's reflected channel: `psi_n = h_breve(n)/|h_breve(n)|`,
/// so `h_breve^H psi = sum_n |h_breve(n)|` exactly.
pub fn mrt_pattern(h_breve_2: &[Complex64]) -> Result<PhasePattern, RisError> {
    let psi = h_breve_2
        .iter()
        .enumerate()
        .map(|(i, b)| {
            if b.norm() == 0.0 {
                Err(RisError::ZeroMagnitude(i))
            } else {
                Ok(b / b.norm())
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PhasePattern { psi })
}

/// SNR with the RIS absent: `|h_s|^2 / sigma^2`.
pub fn no_ris_snr(h_s_eff: Complex64, noise_power: f64) -> f64 {
    crate::channel::snr(h_s_eff, noise_power)
}
