//! Random channel generation, precoding to the effective SISO form, bounded
//! CSI errors, and SNR evaluation.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::RisError;

/// dB floor reported for zero-magnitude channels.
pub const DB_FLOOR: f64 = -120.0;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SystemGeometry {
    /// BS position in meters.
    pub bs: [f64; 2],
    /// RIS center position in meters.
    pub ris: [f64; 2],
    /// UE positions in meters; UE 1 (the attack target) comes first.
    pub ues: Vec<[f64; 2]>,
    /// Path-loss reference distance in meters.
    #[serde(default = "default_d0")]
    pub d0: f64,
    /// Number of BS antennas.
    #[serde(default = "default_num_bs_antennas")]
    pub num_bs_antennas: usize,
}

fn default_d0() -> f64 {
    1.0
}

fn default_num_bs_antennas() -> usize {
    4
}

impl Default for SystemGeometry {
    fn default() -> Self {
        Self {
            bs: [10.0, 0.0],
            ris: [50.0, 100.0],
            ues: vec![[300.0, 0.0], [300.0, 50.0]],
            d0: 1.0,
            num_bs_antennas: 4,
        }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

impl SystemGeometry {
    pub fn num_ues(&self) -> usize {
        self.ues.len()
    }

    pub fn validate(&self) -> Result<(), RisError> {
        let mut errs = Vec::new();
        if self.ues.is_empty() {
            errs.push("at least one UE is required".to_string());
        }
        if self.num_bs_antennas == 0 {
            errs.push("num_bs_antennas must be >= 1".to_string());
        }
        if !(self.d0 > 0.0) {
            errs.push("d0 must be positive".to_string());
        }
        if dist(self.bs, self.ris) <= 0.0 {
            errs.push("BS and RIS positions coincide".to_string());
        }
        for (k, ue) in self.ues.iter().enumerate() {
            if dist(self.bs, *ue) <= 0.0 {
                errs.push(format!("UE {} coincides with the BS", k + 1));
            }
            if dist(self.ris, *ue) <= 0.0 {
                errs.push(format!("UE {} coincides with the RIS", k + 1));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(RisError::InvalidParameter(errs.join("; ")))
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FadingConfig {
    /// Ricean K-factor of the static paths (may be `inf` for pure LoS).
    #[serde(default = "default_kappa")]
    pub rician_k_factor: f64,
    /// Receiver noise power, linear units.
    #[serde(default = "default_noise")]
    pub noise_power: f64,
    /// Path-loss intercept at d0, in dB.
    #[serde(default = "default_intercept")]
    pub pathloss_intercept_db: f64,
    /// Path-loss slope, dB per decade of distance.
    #[serde(default = "default_slope")]
    pub pathloss_exponent_db_per_decade: f64,
}

fn default_kappa() -> f64 {
    10.0
}
fn default_noise() -> f64 {
    1e-7
}
fn default_intercept() -> f64 {
    -30.0
}
fn default_slope() -> f64 {
    20.0
}

impl Default for FadingConfig {
    fn default() -> Self {
        Self {
            rician_k_factor: default_kappa(),
            noise_power: default_noise(),
            pathloss_intercept_db: default_intercept(),
            pathloss_exponent_db_per_decade: default_slope(),
        }
    }
}

impl FadingConfig {
    pub fn validate(&self) -> Result<(), RisError> {
        if !(self.rician_k_factor >= 0.0) {
            return Err(RisError::InvalidParameter("rician_k_factor must be >= 0".into()));
        }
        if !(self.noise_power > 0.0) {
            return Err(RisError::InvalidParameter("noise_power must be positive".into()));
        }
        Ok(())
    }

    /// Linear path-loss gain at distance `d` with this config's intercept/slope.
    pub fn pathloss(&self, d: f64, d0: f64) -> Result<f64, RisError> {
        pathloss_linear_with(
            d,
            d0,
            self.pathloss_intercept_db,
            self.pathloss_exponent_db_per_decade,
        )
    }
}

/// Linear path-loss gain `10^((-30 - 20 log10(d/d0))/10)`.
pub fn pathloss_linear(d: f64, d0: f64) -> Result<f64, RisError> {
    pathloss_linear_with(d, d0, -30.0, 20.0)
}

pub fn pathloss_linear_with(
    d: f64,
    d0: f64,
    intercept_db: f64,
    slope_db_per_decade: f64,
) -> Result<f64, RisError> {
    if !(d > 0.0) || !(d0 > 0.0) {
        return Err(RisError::InvalidParameter(format!(
            "distances must be positive (d = {d}, d0 = {d0})"
        )));
    }
    let db = intercept_db - slope_db_per_decade * (d / d0).log10();
    Ok(10f64.powf(db / 10.0))
}

/// One draw of all physical channels.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// Static BS -> UE paths, K vectors of length M.
    pub h_s: Vec<Vec<Complex64>>,
    /// BS -> RIS channel, M x N row-major.
    pub h_t: Vec<Vec<Complex64>>,
    /// RIS -> UE channels, K vectors of length N.
    pub h_r: Vec<Vec<Complex64>>,
}

impl ChannelRealization {
    pub fn num_ris_elements(&self) -> usize {
        self.h_t.first().map_or(0, |row| row.len())
    }
}

fn cn_sample<R: Rng>(rng: &mut R) -> Complex64 {
    // unit-variance circularly symmetric complex Gaussian
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) / 2f64.sqrt()
}

fn unit_phasor(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// Generate one channel realization.
///
/// Static paths are Ricean with the configured K-factor; the LoS component
/// uses a uniform random base phase and a common per-antenna phase
/// progression, both drawn once per realization.
/// `H_t` is a rank-one LoS outer product of half-wavelength
/// azimuth steering vectors, scaled so every entry has magnitude exactly
/// `sqrt(beta_t)`. RIS -> UE channels are Rayleigh.
///
/// Draw order is fixed: all static paths first, then the RIS -> UE vectors,
/// so the static channels for a given seed do not depend on `n`.
pub fn generate_realization<R: Rng>(
    geometry: &SystemGeometry,
    fading: &FadingConfig,
    n: usize,
    rng: &mut R,
) -> Result<ChannelRealization, RisError> {
    geometry.validate()?;
    fading.validate()?;
    let m = geometry.num_bs_antennas;
    let k_ues = geometry.num_ues();
    let kappa = fading.rician_k_factor;

    // static paths
    let mut h_s = Vec::with_capacity(k_ues);
    for ue in &geometry.ues {
        let beta = fading.pathloss(dist(geometry.bs, *ue), geometry.d0)?;
        let amp = beta.sqrt();
        let base_phase: f64 = rng.gen_range(0.0..2.0 * PI);
        let step_phase: f64 = rng.gen_range(0.0..2.0 * PI);
        let (los_w, nlos_w) = if kappa.is_infinite() {
            (1.0, 0.0)
        } else {
            ((kappa / (kappa + 1.0)).sqrt(), (1.0 / (kappa + 1.0)).sqrt())
        };
        let mut h = Vec::with_capacity(m);
        for ant in 0..m {
            let los = unit_phasor(base_phase + ant as f64 * step_phase);
            let scatter = if nlos_w > 0.0 { cn_sample(rng) } else { Complex64::new(0.0, 0.0) };
            h.push(amp * (los_w * los + nlos_w * scatter));
        }
        h_s.push(h);
    }

    // BS -> RIS LoS rank-one channel
    let beta_t = fading.pathloss(dist(geometry.bs, geometry.ris), geometry.d0)?;
    let azimuth_bs =
        (geometry.ris[1] - geometry.bs[1]).atan2(geometry.ris[0] - geometry.bs[0]);
    let azimuth_ris =
        (geometry.bs[1] - geometry.ris[1]).atan2(geometry.bs[0] - geometry.ris[0]);
    let a_bs: Vec<Complex64> =
        (0..m).map(|i| unit_phasor(PI * i as f64 * azimuth_bs.sin())).collect();
    let a_ris: Vec<Complex64> =
        (0..n).map(|i| unit_phasor(PI * i as f64 * azimuth_ris.sin())).collect();
    let amp_t = beta_t.sqrt();
    let h_t: Vec<Vec<Complex64>> = a_bs
        .iter()
        .map(|&bm| a_ris.iter().map(|&rn| amp_t * bm * rn).collect())
        .collect();

    // RIS -> UE Rayleigh channels
    let mut h_r = Vec::with_capacity(k_ues);
    for ue in &geometry.ues {
        let beta = fading.pathloss(dist(geometry.ris, *ue), geometry.d0)?;
        let amp = beta.sqrt();
        h_r.push((0..n).map(|_| amp * cn_sample(rng)).collect());
    }

    Ok(ChannelRealization { h_s, h_t, h_r })
}

/// Precoder selection policy.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Default)]
#[serde(rename_all = "snake_case")]
pub enum PrecodingPolicy {
    /// `p_k = conj(h_{s,k}) / ||h_{s,k}||`: beamform on the known static
    /// path, making the effective static scalar real positive.
    #[default]
    MatchedStatic,
    /// Fixed random unit-norm precoder per UE.
    RandomUnitNorm,
}

/// Build one precoding vector per UE.
pub fn make_precoders<R: Rng>(
    realization: &ChannelRealization,
    policy: PrecodingPolicy,
    rng: &mut R,
) -> Vec<Vec<Complex64>> {
    realization
        .h_s
        .iter()
        .map(|h| match policy {
            PrecodingPolicy::MatchedStatic => {
                let norm = h.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                h.iter().map(|c| c.conj() / norm).collect()
            }
            PrecodingPolicy::RandomUnitNorm => {
                let v: Vec<Complex64> = h.iter().map(|_| cn_sample(rng)).collect();
                let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                v.iter().map(|c| c / norm).collect()
            }
        })
        .collect()
}

/// Per-UE scalar static term and reflected vector after precoding.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    /// `h_{s,k} = p_k^T h_{s,k}` (scalar per UE).
    pub h_s_eff: Vec<Complex64>,
    /// `h_breve_k` with `h_breve_k^H = p_k^T H_t diag(h_{r,k})`.
    pub h_breve: Vec<Vec<Complex64>>,
    /// Noise power, linear.
    pub noise_power: f64,
}

impl EffectiveChannel {
    pub fn num_ues(&self) -> usize {
        self.h_s_eff.len()
    }

    pub fn num_ris_elements(&self) -> usize {
        self.h_breve.first().map_or(0, |v| v.len())
    }

    /// Cascaded scalar channel `h_k = h_{s,k} + h_breve_k^H psi`.
    pub fn cascaded(&self, ue: usize, psi: &[Complex64]) -> Complex64 {
        self.h_s_eff[ue]
            + self.h_breve[ue]
                .iter()
                .zip(psi)
                .map(|(b, p)| b.conj() * p)
                .sum::<Complex64>()
    }
}

/// Reduce the MISO system to the effective SISO form.
pub fn effective_channel(
    realization: &ChannelRealization,
    precoders: &[Vec<Complex64>],
    noise_power: f64,
) -> Result<EffectiveChannel, RisError> {
    let k_ues = realization.h_s.len();
    if precoders.len() != k_ues {
        return Err(RisError::DimensionMismatch(format!(
            "{} precoders for {k_ues} UEs",
            precoders.len()
        )));
    }
    let m = realization.h_t.len();
    let n = realization.num_ris_elements();
    let mut h_s_eff = Vec::with_capacity(k_ues);
    let mut h_breve = Vec::with_capacity(k_ues);
    for k in 0..k_ues {
        let p = &precoders[k];
        if p.len() != m || realization.h_s[k].len() != m {
            return Err(RisError::DimensionMismatch(format!(
                "precoder/static-path length mismatch for UE {} (expected {m})",
                k + 1
            )));
        }
        // p^T h_s (plain transpose, no conjugation)
        h_s_eff.push(p.iter().zip(&realization.h_s[k]).map(|(a, b)| a * b).sum());
        // row = p^T H_t diag(h_r); h_breve = conj(row)
        let row: Vec<Complex64> = (0..n)
            .map(|j| {
                let pt_ht: Complex64 = (0..m).map(|i| p[i] * realization.h_t[i][j]).sum();
                pt_ht * realization.h_r[k][j]
            })
            .collect();
        h_breve.push(row.iter().map(|c| c.conj()).collect());
    }
    Ok(EffectiveChannel { h_s_eff, h_breve, noise_power })
}

/// `|h|^2 / sigma^2`.
pub fn snr(h: Complex64, noise_power: f64) -> f64 {
    h.norm_sqr() / noise_power
}

/// SNR in dB, clamped at [`DB_FLOOR`] for (numerically) zero ratios.
pub fn snr_db(h: Complex64, noise_power: f64) -> f64 {
    ratio_to_db(snr(h, noise_power))
}

/// dB of a linear ratio with the same floor convention.
pub fn ratio_to_db(ratio: f64) -> f64 {
    let db = 10.0 * ratio.log10();
    if db.is_finite() {
        db.max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Bounded CSI error model on the effective static scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiErrorModel {
    pub eta: f64,
    /// Per-UE error radii `eps_{s,k} = eta * |h_{s,k}|`.
    pub epsilons: Vec<f64>,
}

impl CsiErrorModel {
    pub fn from_eta(eta: f64, effective: &EffectiveChannel) -> Result<Self, RisError> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(RisError::InvalidParameter(format!("eta must be in [0,1], got {eta}")));
        }
        Ok(Self {
            eta,
            epsilons: effective.h_s_eff.iter().map(|h| eta * h.norm()).collect(),
        })
    }
}

/// Draw uniformly from the closed complex disk of radius `eps`.
pub fn draw_static_error<R: Rng>(eps: f64, rng: &mut R) -> Complex64 {
    if eps == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let r = eps * rng.gen::<f64>().sqrt();
    let theta = rng.gen_range(0.0..2.0 * PI);
    Complex64::from_polar(r, theta)
}

/// Split a true static scalar into (estimate, realized error) with
/// `estimate + error = truth` exactly.
pub fn split_estimate<R: Rng>(
    truth: Complex64,
    eps: f64,
    rng: &mut R,
) -> (Complex64, Complex64) {
    let delta = draw_static_error(eps, rng);
    (truth - delta, delta)
}
