//! TOML experiment configuration with full-default minimal configs and
//! multi-violation validation.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::ccp::CcpConfig;
use crate::channel::{FadingConfig, PrecodingPolicy, SystemGeometry};
use crate::error::RisError;

/// Everything a sweep can run: attack kinds plus reference policies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash, PartialOrd, Ord)]
pub enum Method {
    P1,
    P2,
    P1Robust,
    P2Robust,
    Random,
    #[serde(rename = "MRT")]
    Mrt,
    #[serde(rename = "NoRIS")]
    NoRis,
    Lemma1,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::P1,
        Method::P2,
        Method::P1Robust,
        Method::P2Robust,
        Method::Random,
        Method::Mrt,
        Method::NoRis,
        Method::Lemma1,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::P1 => "P1",
            Method::P2 => "P2",
            Method::P1Robust => "P1Robust",
            Method::P2Robust => "P2Robust",
            Method::Random => "Random",
            Method::Mrt => "MRT",
            Method::NoRis => "NoRIS",
            Method::Lemma1 => "Lemma1",
        }
    }

    /// Stable id used in seed derivation; never reorder.
    pub fn seed_id(&self) -> u64 {
        match self {
            Method::P1 => 1,
            Method::P2 => 2,
            Method::P1Robust => 3,
            Method::P2Robust => 4,
            Method::Random => 5,
            Method::Mrt => 6,
            Method::NoRis => 7,
            Method::Lemma1 => 8,
        }
    }

    /// Does the eta sweep dimension apply?
    pub fn uses_eta(&self) -> bool {
        matches!(self, Method::P1Robust | Method::P2Robust)
    }

    /// Does the c sweep dimension apply?
    pub fn uses_c(&self) -> bool {
        matches!(self, Method::P2 | Method::P2Robust)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub master_seed: u64,
    pub n_values: Vec<usize>,
    /// Static-path error fractions, used by robust methods only.
    pub eta_values: Vec<f64>,
    /// Min-SNR fractions, used by P2-family methods only.
    pub c_values: Vec<f64>,
    pub methods: Vec<Method>,
    /// Worker threads; 0 means all available. The RISIM_WORKERS environment
    /// variable overrides this.
    pub workers: usize,
    pub precoding: PrecodingPolicy,
    pub geometry: SystemGeometry,
    pub fading: FadingConfig,
    pub ccp: CcpConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// CSV file name (relative to the output directory given on the CLI).
    pub csv: String,
    /// JSON summary file name.
    pub summary: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { csv: "records.csv".into(), summary: "summary.json".into() }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            trials: 1,
            master_seed: 0,
            n_values: vec![2],
            eta_values: vec![0.1],
            c_values: vec![0.9],
            methods: vec![Method::P1],
            workers: 0,
            precoding: PrecodingPolicy::MatchedStatic,
            geometry: SystemGeometry::default(),
            fading: FadingConfig::default(),
            ccp: CcpConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Validate everything at once and report all violations together.
    pub fn validate(&self) -> Result<(), RisError> {
        let mut violations = Vec::new();
        if self.trials == 0 {
            violations.push("trials must be >= 1".to_string());
        }
        if self.n_values.is_empty() {
            violations.push("n_values must be non-empty".to_string());
        }
        if self.eta_values.is_empty() {
            violations.push("eta_values must be non-empty".to_string());
        }
        if self.eta_values.iter().any(|e| !(0.0..=1.0).contains(e)) {
            violations.push("eta_values must lie in [0, 1]".to_string());
        }
        if self.c_values.is_empty() {
            violations.push("c_values must be non-empty".to_string());
        }
        if self.c_values.iter().any(|c| !(*c > 0.0 && *c <= 1.0)) {
            violations.push("c_values must lie in (0, 1]".to_string());
        }
        if self.methods.is_empty() {
            violations.push("methods must be non-empty".to_string());
        }
        let needs_second_ue = self
            .methods
            .iter()
            .any(|m| m.uses_c() || *m == Method::Mrt);
        if needs_second_ue && self.geometry.num_ues() < 2 {
            violations.push(
                "P2-family and MRT methods need at least two UEs in geometry.ues".to_string(),
            );
        }
        if let Err(e) = self.geometry.validate() {
            violations.push(e.to_string());
        }
        if let Err(e) = self.fading.validate() {
            violations.push(e.to_string());
        }
        if let Err(e) = self.ccp.validate() {
            violations.push(e.to_string());
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(RisError::Config(violations.join("; ")))
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, RisError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| RisError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> Result<String, RisError> {
        toml::to_string_pretty(self).map_err(|e| RisError::Config(e.to_string()))
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, RisError> {
    let text = std::fs::read_to_string(path).map_err(|source| RisError::Io {
        path: path.display().to_string(),
        source,
    })?;
    ExperimentConfig::from_toml_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_applies_defaults() {
        let cfg = ExperimentConfig::from_toml_str("trials = 1\nn_values = [2]\n").unwrap();
        assert_eq!(cfg.trials, 1);
        assert_eq!(cfg.n_values, vec![2]);
        assert_eq!(cfg.geometry.num_bs_antennas, 4);
        assert_eq!(cfg.fading.noise_power, 1e-7);
        assert_eq!(cfg.ccp.mu, 1.5);
        assert_eq!(cfg.ccp.nu, 1e-3);
        assert_eq!(cfg.ccp.lambda_max, 1e4);
        assert_eq!(cfg.ccp.omega_max, 1e4);
    }

    #[test]
    fn zero_trials_rejected_and_all_violations_reported() {
        let err = ExperimentConfig::from_toml_str("trials = 0\nn_values = []\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("trials must be >= 1"), "{msg}");
        assert!(msg.contains("n_values must be non-empty"), "{msg}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::from_toml_str("trials = 1\nbogus_key = 3\n").unwrap_err();
        assert!(err.to_string().contains("bogus_key"));
    }

    #[test]
    fn serialize_roundtrip_is_equal() {
        let cfg = ExperimentConfig {
            trials: 7,
            master_seed: 99,
            n_values: vec![2, 5, 10],
            eta_values: vec![0.0, 0.1],
            c_values: vec![0.5, 0.9],
            methods: vec![Method::P1, Method::P2Robust, Method::NoRis],
            ..Default::default()
        };
        let text = cfg.to_toml_string().unwrap();
        let back = ExperimentConfig::from_toml_str(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn method_names_roundtrip_their_serde_spelling() {
        for m in Method::ALL {
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
    }

    #[test]
    fn mrt_requires_two_ues() {
        let mut cfg = ExperimentConfig { methods: vec![Method::Mrt], ..Default::default() };
        cfg.geometry.ues = vec![[300.0, 0.0]];
        assert!(cfg.validate().is_err());
        cfg.geometry.ues = vec![[300.0, 0.0], [300.0, 50.0]];
        assert!(cfg.validate().is_ok());
    }
}
