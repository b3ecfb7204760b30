//! Simulation library for destructive RIS phase-shift optimization:
//! channel generation, a small conic-programming layer, the penalty-CCP
//! attack solvers, closed-form and baseline patterns, and the Monte-Carlo
//! sweep harness.

pub mod baselines;
pub mod ccp;
pub mod channel;
pub mod closed_form;
pub mod conic;
pub mod error;
pub mod harness;

pub use ccp::{
    AttackProblem, CcpConfig, CcpRunResult, CcpTrace, PhasePattern, ProblemKind, Termination,
};
pub use channel::{ChannelRealization, EffectiveChannel, FadingConfig, SystemGeometry};
pub use error::RisError;
