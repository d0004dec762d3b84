//! Experiment drivers: parameter sweeps over the library, CSV and JSON
//! output, and the command-line front end.

pub mod cli;
mod config;
mod experiments;
mod table;

pub use config::{
    Candidate, CandidateKind, Experiment, ExperimentConfig, ModelRef, OperatorRef, ShiftRef,
    Tolerances, TraceGenerator,
};
pub use experiments::{
    circle_fit, coherence_trace, holonomy_sweep, kato_report, restricted_spectrum, robustness_report,
    run_experiment, scaling_sweep, spectrum_sweep, CircleFit,
};
pub use table::{fit_loglog, sidecar_path, write_outputs, Cell, Fit, SweepResult};

use thiserror::Error;

/// Failure of an experiment run.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum XpError {
    /// The configuration is malformed or refers to something that does not
    /// exist.
    #[error("config error: {0}")]
    Config(String),
    /// A numerical routine failed on valid input.
    #[error("numerical failure: {0}")]
    Numerical(#[from] crate::Error),
    /// Results could not be serialized or written.
    #[error("output error: {0}")]
    Output(String),
}

impl XpError {
    pub(crate) fn output(e: impl std::fmt::Display) -> Self {
        XpError::Output(e.to_string())
    }

    /// Process exit code: 1 for configuration errors, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            XpError::Config(_) => 1,
            XpError::Numerical(_) | XpError::Output(_) => 2,
        }
    }
}
