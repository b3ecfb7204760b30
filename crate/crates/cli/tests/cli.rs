//! End-to-end tests driving the built `risim` binary.

use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn risim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risim"))
        .args(args)
        .output()
        .expect("failed to spawn risim")
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("risim-cli-{tag}"));
    fs::create_dir_all(&dir).unwrap();
    dir
}

const CONFIG: &str = r#"
trials = 2
master_seed = 7
n_values = [2, 4]
eta_values = [0.1]
c_values = [0.9]
methods = ["P1", "P2", "Random", "MRT", "NoRIS"]

[geometry]
bs = [0.0, 0.0]
ris = [14.0, 7.0]
ues = [[20.0, 0.0], [15.0, 9.0]]

[fading]
pathloss_intercept_db = 0.0
"#;

#[test]
fn run_writes_csv_and_summary() {
    let dir = temp_dir("run");
    let config_path = dir.join("config.toml");
    fs::write(&config_path, CONFIG).unwrap();

    let out = risim(&[
        "run",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(dir.join("records.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("method,n,eta,c,trial,seed,snr1_db"));
    // 5 methods x 2 N values x 2 trials, no extra eta/c expansion here
    assert_eq!(lines.count(), 20);

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert!(summary.as_object().unwrap().len() >= 10);

    // re-running with the same seed reproduces the CSV byte for byte
    let dir2 = temp_dir("run-again");
    let out = risim(&[
        "run",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        dir2.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(csv, fs::read_to_string(dir2.join("records.csv")).unwrap());
}

#[test]
fn run_rejects_invalid_config() {
    let dir = temp_dir("bad-config");
    let config_path = dir.join("config.toml");
    fs::write(&config_path, "trials = 0\nn_values = []\n").unwrap();
    let out = risim(&[
        "run",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("trials must be >= 1"), "{err}");
}

#[test]
fn lemma1_reports_nullification() {
    // |h_s| = 1.2 <= N * rho = 2.0: exact null is achievable
    let out = risim(&["lemma1", "--hs", "1.2", "--rho", "0.5", "--n", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("xi_star"), "{text}");
    let snr_line = text.lines().find(|l| l.starts_with("snr1")).unwrap();
    let snr: f64 = snr_line
        .split_whitespace()
        .nth(2)
        .unwrap()
        .parse()
        .unwrap();
    assert!(snr <= 1e-12, "expected null, got {snr}");
}

#[test]
fn selftest_passes() {
    let out = risim(&["selftest"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("all selftests passed"));
}

#[test]
fn usage_errors_exit_with_code_2() {
    assert_eq!(risim(&["lemma1", "--hs", "1.0"]).status.code(), Some(2));
    assert_eq!(risim(&["no-such-command"]).status.code(), Some(2));
}
