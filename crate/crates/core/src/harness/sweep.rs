//! Deterministic Monte-Carlo sweep over (method, N, eta, c, trial).

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

use crate::baselines;
use crate::ccp::{
    self, AttackProblem, CcpRunResult, PhasePattern, ProblemKind, Termination,
};
use crate::channel::{
    self, effective_channel, generate_realization, make_precoders, ratio_to_db, snr_db,
    EffectiveChannel,
};
use crate::closed_form::{lemma1_best, lemma1_pattern, LosInstance};
use crate::error::RisError;
use crate::harness::config::{ExperimentConfig, Method};
use crate::harness::records::{record_sort_key, TrialRecord};

/// SplitMix64 finalizer.
fn splitmix64(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child-seed derivation: fold each coordinate through SplitMix64. Distinct
/// coordinate tuples give (for practical purposes) independent streams, and
/// the value only depends on the tuple, never on execution order.
pub fn mix_seed(parts: &[u64]) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3u64; // arbitrary nonzero start
    for &p in parts {
        h = splitmix64(h ^ p);
    }
    h
}

const CHANNEL_TAG: u64 = 0x6368_616e; // "chan"
const ERROR_TAG: u64 = 0x6365_6572; // "ceer"

/// Channel seed deliberately ignores method, N, eta, and c so every method
/// sees the same realization for a given trial (the static paths are drawn
/// before the RIS-side paths, so they are also N-independent).
pub fn channel_seed(master: u64, trial: usize) -> u64 {
    mix_seed(&[master, CHANNEL_TAG, trial as u64])
}

pub fn algorithm_seed(
    master: u64,
    method: Method,
    n: usize,
    eta: Option<f64>,
    c: Option<f64>,
    trial: usize,
) -> u64 {
    mix_seed(&[
        master,
        method.seed_id(),
        n as u64,
        eta.map_or(0, f64::to_bits),
        c.map_or(0, f64::to_bits),
        trial as u64,
    ])
}

/// Error-draw seed shared across methods and N for a given (eta, trial), so
/// robust variants are compared on identical error realizations.
fn error_seed(master: u64, eta: f64, trial: usize) -> u64 {
    mix_seed(&[master, ERROR_TAG, eta.to_bits(), trial as u64])
}

#[derive(Debug, Clone, Copy)]
pub struct Cell {
    method: Method,
    n: usize,
    eta: Option<f64>,
    c: Option<f64>,
    trial: usize,
}

fn enumerate_cells(config: &ExperimentConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &method in &config.methods {
        let etas: Vec<Option<f64>> = if method.uses_eta() {
            config.eta_values.iter().map(|&e| Some(e)).collect()
        } else {
            vec![None]
        };
        let cs: Vec<Option<f64>> = if method.uses_c() {
            config.c_values.iter().map(|&c| Some(c)).collect()
        } else {
            vec![None]
        };
        for &n in &config.n_values {
            for &eta in &etas {
                for &c in &cs {
                    for trial in 0..config.trials {
                        cells.push(Cell { method, n, eta, c, trial });
                    }
                }
            }
        }
    }
    cells
}

/// Expected record count for a valid config.
pub fn expected_record_count(config: &ExperimentConfig) -> usize {
    config
        .methods
        .iter()
        .map(|m| {
            let e = if m.uses_eta() { config.eta_values.len() } else { 1 };
            let c = if m.uses_c() { config.c_values.len() } else { 1 };
            config.n_values.len() * e * c * config.trials
        })
        .sum::<usize>()
}

struct MethodOutcome {
    pattern: Option<PhasePattern>,
    /// Channel scalars the optimizer saw (estimates for robust methods).
    nominal: Option<AttackProblem>,
    /// UE-1 error radius for worst-case evaluation.
    eps1: Option<f64>,
    iterations: usize,
    converged: bool,
    status: String,
    gamma: Vec<f64>,
}

fn ccp_status(run: &CcpRunResult) -> String {
    match &run.trace.termination {
        Termination::Converged => "optimal".to_string(),
        Termination::MaxIterations => "max_iterations".to_string(),
        Termination::SubproblemFailed(s) => format!("failed_{s:?}").to_lowercase(),
    }
}

fn run_method(
    config: &ExperimentConfig,
    cell: Cell,
    eff: &EffectiveChannel,
    algo_rng: &mut ChaCha8Rng,
) -> Result<MethodOutcome, RisError> {
    let n = cell.n;
    let noise = eff.noise_power;
    let ok = |pattern: Option<PhasePattern>| MethodOutcome {
        pattern,
        nominal: None,
        eps1: None,
        iterations: 0,
        converged: true,
        status: "ok".to_string(),
        gamma: Vec::new(),
    };

    match cell.method {
        Method::NoRis => Ok(ok(None)),
        Method::Random => Ok(ok(Some(baselines::random_pattern(n, algo_rng)))),
        Method::Mrt => Ok(ok(Some(baselines::mrt_pattern(&eff.h_breve[1])?))),
        Method::Lemma1 => {
            // heuristic on general channels: use the actual per-element
            // phases with the mean reflected magnitude as rho_r
            let h1 = &eff.h_breve[0];
            let rho_r = if n == 0 {
                0.0
            } else {
                h1.iter().map(|b| b.norm()).sum::<f64>() / n as f64
            };
            let instance = LosInstance {
                h_s_mag: eff.h_s_eff[0].norm(),
                h_s_phase: eff.h_s_eff[0].arg(),
                rho_r,
                element_phases: h1.iter().map(|b| b.arg()).collect(),
                noise_power: noise,
            };
            let (xi, _) = lemma1_best(&instance);
            Ok(ok(Some(lemma1_pattern(&instance, xi))))
        }
        Method::P1 | Method::P2 | Method::P1Robust | Method::P2Robust => {
            let kind = match cell.method {
                Method::P1 => ProblemKind::P1,
                Method::P2 => ProblemKind::P2,
                Method::P1Robust => ProblemKind::P1Robust,
                _ => ProblemKind::P2Robust,
            };
            let multi_ue = kind.has_min_snr();
            let ue_range = if multi_ue { 0..eff.num_ues() } else { 0..1 };

            let (h_s_eff, epsilons) = if kind.is_robust() {
                let eta = cell.eta.expect("robust cell carries eta");
                let mut err_rng =
                    ChaCha8Rng::seed_from_u64(error_seed(config.master_seed, eta, cell.trial));
                let mut estimates = Vec::new();
                let mut radii = Vec::new();
                // the error realization for a UE must not depend on how many
                // UEs the problem includes, so always draw all of them
                for k in 0..eff.num_ues() {
                    let truth = eff.h_s_eff[k];
                    let eps = eta * truth.norm();
                    let (est, _) = channel::split_estimate(truth, eps, &mut err_rng);
                    estimates.push(est);
                    radii.push(eps);
                }
                (
                    ue_range.clone().map(|k| estimates[k]).collect::<Vec<_>>(),
                    ue_range.clone().map(|k| radii[k]).collect::<Vec<_>>(),
                )
            } else {
                (ue_range.clone().map(|k| eff.h_s_eff[k]).collect(), Vec::new())
            };
            let h_breve: Vec<Vec<Complex64>> =
                ue_range.clone().map(|k| eff.h_breve[k].clone()).collect();

            let gamma = if multi_ue {
                ccp::compute_gamma(
                    cell.c.expect("P2-family cell carries c"),
                    &h_s_eff,
                    &h_breve,
                    noise,
                )?
            } else {
                Vec::new()
            };

            let problem = AttackProblem {
                kind,
                h_s_eff,
                h_breve,
                noise_power: noise,
                min_snr: gamma.clone(),
                epsilons: epsilons.clone(),
            };
            let run = ccp::run_algorithm1_restarts(&problem, &config.ccp, algo_rng)?;
            Ok(MethodOutcome {
                status: ccp_status(&run),
                iterations: run.trace.iterations.len(),
                converged: run.converged(),
                eps1: epsilons.first().copied(),
                pattern: Some(run.pattern),
                nominal: Some(problem),
                gamma,
            })
        }
    }
}

/// Run one sweep cell. Never fails: channel-generation or method errors are
/// recorded in-status with the no-RIS channel reported.
pub fn run_cell_record(config: &ExperimentConfig, cell: Cell) -> TrialRecord {
    let start = Instant::now();
    let seed = algorithm_seed(
        config.master_seed,
        cell.method,
        cell.n,
        cell.eta,
        cell.c,
        cell.trial,
    );
    let mut record = TrialRecord {
        method: cell.method,
        n: cell.n,
        eta: cell.eta,
        c: cell.c,
        trial_index: cell.trial,
        seed,
        snr1_db: crate::channel::DB_FLOOR,
        snr1_nominal_db: crate::channel::DB_FLOOR,
        snr1_worstcase_db: None,
        snr_k_db: Vec::new(),
        gamma_k_db: Vec::new(),
        iterations: 0,
        converged: false,
        status: String::new(),
        wall_time_ms: 0.0,
    };

    let outcome = (|| -> Result<(), RisError> {
        let mut chan_rng =
            ChaCha8Rng::seed_from_u64(channel_seed(config.master_seed, cell.trial));
        let realization =
            generate_realization(&config.geometry, &config.fading, cell.n, &mut chan_rng)?;
        let precoders = make_precoders(&realization, config.precoding, &mut chan_rng);
        let eff = effective_channel(&realization, &precoders, config.fading.noise_power)?;
        let k_ues = eff.num_ues();

        let mut algo_rng = ChaCha8Rng::seed_from_u64(seed);
        let outcome = run_method(config, cell, &eff, &mut algo_rng);

        // the realized channel absent any usable pattern is the no-RIS one
        let (pattern, meta) = match outcome {
            Ok(o) => (o.pattern.clone(), Ok(o)),
            Err(e) => (None, Err(e)),
        };
        let realized = |ue: usize| match &pattern {
            Some(p) => eff.cascaded(ue, &p.psi),
            None => eff.h_s_eff[ue],
        };
        record.snr1_db = snr_db(realized(0), eff.noise_power);
        record.snr1_nominal_db = record.snr1_db;
        record.snr_k_db = (1..k_ues)
            .map(|k| snr_db(realized(k), eff.noise_power))
            .collect();
        record.gamma_k_db = vec![None; k_ues.saturating_sub(1)];

        match meta {
            Ok(o) => {
                record.iterations = o.iterations;
                record.converged = o.converged;
                record.status = o.status;
                if !o.gamma.is_empty() {
                    record.gamma_k_db =
                        o.gamma.iter().map(|&g| Some(ratio_to_db(g))).collect();
                }
                if let (Some(problem), Some(p)) = (&o.nominal, &pattern) {
                    record.snr1_nominal_db =
                        snr_db(problem.cascaded(0, &p.psi), eff.noise_power);
                    if let Some(eps1) = o.eps1 {
                        let (worst, _) = ccp::worst_case_snr_exact(
                            problem.cascaded(0, &p.psi),
                            eps1,
                            eff.noise_power,
                        );
                        record.snr1_worstcase_db = Some(ratio_to_db(worst));
                    }
                }
            }
            Err(e) => {
                record.status = format!("error: {e}");
                record.converged = false;
            }
        }
        Ok(())
    })();

    if let Err(e) = outcome {
        record.status = format!("error: {e}");
        record.converged = false;
    }
    record.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    record
}

fn worker_count(config: &ExperimentConfig) -> usize {
    match std::env::var("RISIM_WORKERS") {
        Ok(v) => v.parse().unwrap_or(config.workers),
        Err(_) => config.workers,
    }
}

/// Run the full sweep. Records come back sorted by
/// (method, n, eta, c, trial) regardless of parallel scheduling.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<TrialRecord>, RisError> {
    config.validate()?;
    let cells = enumerate_cells(config);
    let workers = worker_count(config);

    let mut records: Vec<TrialRecord> = if workers == 1 {
        cells.iter().map(|&cell| run_cell_record(config, cell)).collect()
    } else {
        let run = || {
            cells
                .par_iter()
                .map(|&cell| run_cell_record(config, cell))
                .collect::<Vec<_>>()
        };
        if workers == 0 {
            run()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| RisError::Config(e.to_string()))?
                .install(run)
        }
    };
    records.sort_by_key(record_sort_key);
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::records::write_csv;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            trials: 3,
            master_seed: 7,
            n_values: vec![1, 4, 9],
            methods: vec![Method::NoRis, Method::Random],
            ..Default::default()
        }
    }

    #[test]
    fn no_ris_identical_across_n() {
        let config = ExperimentConfig {
            methods: vec![Method::NoRis],
            ..small_config()
        };
        let records = run_sweep(&config).unwrap();
        for trial in 0..config.trials {
            let values: Vec<f64> = records
                .iter()
                .filter(|r| r.trial_index == trial)
                .map(|r| r.snr1_db)
                .collect();
            assert_eq!(values.len(), config.n_values.len());
            assert!(values.windows(2).all(|w| w[0] == w[1]), "{values:?}");
        }
    }

    #[test]
    fn completeness_with_collapsed_dimensions() {
        let config = ExperimentConfig {
            trials: 2,
            n_values: vec![1, 2],
            eta_values: vec![0.0, 0.1, 0.2],
            c_values: vec![0.5, 0.9],
            methods: vec![Method::NoRis, Method::P2, Method::P1Robust, Method::P2Robust],
            ..Default::default()
        };
        // NoRIS: 2*2 = 4; P2: 2*2*2 = 8; P1Robust: 2*3*2 = 12;
        // P2Robust: 2*3*2*2 = 24
        assert_eq!(expected_record_count(&config), 4 + 8 + 12 + 24);
    }

    #[test]
    fn sweep_is_deterministic_and_parallel_invariant() {
        let config = small_config();
        let serial = ExperimentConfig { workers: 1, ..config.clone() };
        let parallel = ExperimentConfig { workers: 0, ..config.clone() };
        let a = run_sweep(&serial).unwrap();
        let b = run_sweep(&parallel).unwrap();
        let c = run_sweep(&parallel).unwrap();
        assert_eq!(a.len(), expected_record_count(&config));

        let dir = std::env::temp_dir().join("risim-sweep-test");
        std::fs::create_dir_all(&dir).unwrap();
        let paths = [dir.join("a.csv"), dir.join("b.csv"), dir.join("c.csv")];
        let k = config.geometry.num_ues();
        write_csv(&a, k, &paths[0]).unwrap();
        write_csv(&b, k, &paths[1]).unwrap();
        write_csv(&c, k, &paths[2]).unwrap();
        let bytes: Vec<Vec<u8>> =
            paths.iter().map(|p| std::fs::read(p).unwrap()).collect();
        assert_eq!(bytes[0], bytes[1]);
        assert_eq!(bytes[1], bytes[2]);
    }

    #[test]
    fn seed_mixing_distinguishes_coordinates() {
        let a = algorithm_seed(1, Method::P1, 4, None, None, 0);
        assert_ne!(a, algorithm_seed(2, Method::P1, 4, None, None, 0));
        assert_ne!(a, algorithm_seed(1, Method::P2, 4, None, None, 0));
        assert_ne!(a, algorithm_seed(1, Method::P1, 5, None, None, 0));
        assert_ne!(a, algorithm_seed(1, Method::P1, 4, Some(0.1), None, 0));
        assert_ne!(a, algorithm_seed(1, Method::P1, 4, None, Some(0.9), 0));
        assert_ne!(a, algorithm_seed(1, Method::P1, 4, None, None, 1));
        assert_ne!(channel_seed(1, 0), channel_seed(1, 1));
        // channel seed ignores everything but (master, trial) by signature
    }

    #[test]
    fn lemma1_runs_on_generic_channels() {
        let config = ExperimentConfig {
            trials: 2,
            n_values: vec![4],
            methods: vec![Method::Lemma1, Method::NoRis],
            ..Default::default()
        };
        let records = run_sweep(&config).unwrap();
        assert_eq!(records.len(), 4);
        assert!(records.iter().all(|r| r.status == "ok"));
    }
}
