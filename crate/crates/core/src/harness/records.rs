//! Per-trial results, CSV emission, and the JSON summary.

use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::RisError;
use crate::harness::config::Method;

/// Outcome of one (method, N, eta, c, trial) cell.
///
/// `eta`/`c` are `None` for methods that ignore those sweep dimensions.
/// `wall_time_ms` is kept for in-process inspection but deliberately not
/// written to the CSV so identical configurations produce byte-identical
/// files.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub method: Method,
    pub n: usize,
    pub eta: Option<f64>,
    pub c: Option<f64>,
    pub trial_index: usize,
    pub seed: u64,
    /// Realized target SNR at the true channel (dB, floored).
    pub snr1_db: f64,
    /// Target SNR at the channel the optimizer saw (equals `snr1_db` under
    /// perfect CSI).
    pub snr1_nominal_db: f64,
    /// Closed-form worst case over the error disk (robust methods only).
    pub snr1_worstcase_db: Option<f64>,
    /// Realized SNRs of UEs 2..K.
    pub snr_k_db: Vec<f64>,
    /// Min-SNR levels for UEs 2..K (P2-family methods only).
    pub gamma_k_db: Vec<Option<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub status: String,
    pub wall_time_ms: f64,
}

/// Deterministic sort key matching the documented CSV row order.
pub fn record_sort_key(r: &TrialRecord) -> (u64, usize, u64, u64, usize) {
    (
        r.method.seed_id(),
        r.n,
        r.eta.map_or(0, f64::to_bits),
        r.c.map_or(0, f64::to_bits),
        r.trial_index,
    )
}

fn fmt_f64(v: f64) -> String {
    // shortest roundtrip representation; stable across runs
    format!("{v}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Fixed column order: method, n, eta, c, trial, seed, snr1_db,
/// snr1_nominal_db, snr1_worstcase_db, snr{k}_db and gamma{k}_db for
/// k = 2..=K, iterations, converged, status.
pub fn csv_header(num_ues: usize) -> Vec<String> {
    let mut cols = vec![
        "method".to_string(),
        "n".to_string(),
        "eta".to_string(),
        "c".to_string(),
        "trial".to_string(),
        "seed".to_string(),
        "snr1_db".to_string(),
        "snr1_nominal_db".to_string(),
        "snr1_worstcase_db".to_string(),
    ];
    for k in 2..=num_ues {
        cols.push(format!("snr{k}_db"));
    }
    for k in 2..=num_ues {
        cols.push(format!("gamma{k}_db"));
    }
    cols.push("iterations".to_string());
    cols.push("converged".to_string());
    cols.push("status".to_string());
    cols
}

fn csv_row(r: &TrialRecord, num_ues: usize) -> Vec<String> {
    let mut row = vec![
        r.method.name().to_string(),
        r.n.to_string(),
        fmt_opt(r.eta),
        fmt_opt(r.c),
        r.trial_index.to_string(),
        r.seed.to_string(),
        fmt_f64(r.snr1_db),
        fmt_f64(r.snr1_nominal_db),
        fmt_opt(r.snr1_worstcase_db),
    ];
    for k in 0..num_ues - 1 {
        row.push(fmt_opt(r.snr_k_db.get(k).copied()));
    }
    for k in 0..num_ues - 1 {
        row.push(fmt_opt(r.gamma_k_db.get(k).copied().flatten()));
    }
    row.push(r.iterations.to_string());
    row.push(r.converged.to_string());
    row.push(r.status.clone());
    row
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> RisError + '_ {
    move |source| RisError::Io { path: path.display().to_string(), source }
}

/// Write the record CSV (RFC-4180 via the `csv` crate).
pub fn write_csv(records: &[TrialRecord], num_ues: usize, path: &Path) -> Result<(), RisError> {
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut writer = csv::Writer::from_writer(file);
    writer.write_record(csv_header(num_ues)).map_err(|e| RisError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    })?;
    for r in records {
        writer.write_record(csv_row(r, num_ues)).map_err(|e| RisError::Io {
            path: path.display().to_string(),
            source: std::io::Error::other(e),
        })?;
    }
    writer.flush().map_err(io_err(path))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct GroupSummary {
    pub count: usize,
    pub mean_snr1_db: f64,
    pub median_snr1_db: f64,
    pub p10_snr1_db: f64,
    pub p90_snr1_db: f64,
}

/// Lower-interpolation quantile of a sorted slice.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[idx]
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Group records by (method, n, eta, c) and summarize snr1_db.
pub fn summarize(records: &[TrialRecord]) -> BTreeMap<String, GroupSummary> {
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        let key = format!(
            "method={},n={},eta={},c={}",
            r.method.name(),
            r.n,
            fmt_opt(r.eta),
            fmt_opt(r.c)
        );
        groups.entry(key).or_default().push(r.snr1_db);
    }
    groups
        .into_iter()
        .map(|(key, mut vals)| {
            let mean = vals.iter().sum::<f64>() / vals.len() as f64;
            let med = median(&mut vals);
            let summary = GroupSummary {
                count: vals.len(),
                mean_snr1_db: mean,
                median_snr1_db: med,
                p10_snr1_db: quantile(&vals, 0.1),
                p90_snr1_db: quantile(&vals, 0.9),
            };
            (key, summary)
        })
        .collect()
}

pub fn write_summary(records: &[TrialRecord], path: &Path) -> Result<(), RisError> {
    let summary = summarize(records);
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| RisError::Config(e.to_string()))?;
    let mut file = std::fs::File::create(path).map_err(io_err(path))?;
    file.write_all(json.as_bytes()).map_err(io_err(path))?;
    file.write_all(b"\n").map_err(io_err(path))?;
    Ok(())
}

/// Write both artifacts.
pub fn write_results(
    records: &[TrialRecord],
    num_ues: usize,
    csv_path: &Path,
    summary_path: &Path,
) -> Result<(), RisError> {
    write_csv(records, num_ues, csv_path)?;
    write_summary(records, summary_path)
}
