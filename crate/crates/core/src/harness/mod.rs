//! Experiment configuration, Monte-Carlo orchestration, and result emission.

pub mod config;
pub mod records;
pub mod sweep;

pub use config::{load_config, ExperimentConfig, Method, OutputConfig};
pub use records::{summarize, write_results, GroupSummary, TrialRecord};
pub use sweep::{expected_record_count, run_sweep};
