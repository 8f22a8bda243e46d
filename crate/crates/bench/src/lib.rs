//! Orchestration around the core pipeline: dataset files, experiment
//! runners that emit CSV/JSON reports, and the `hideprint` command line.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod experiments;
pub mod report;

use std::fmt::Display;

/// Failures split by who caused them: bad inputs versus a run that died.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    /// Rejected configuration, arguments, or input files.
    #[error("{0}")]
    Validation(String),
    /// Failure while executing an otherwise valid request.
    #[error("{0}")]
    Runtime(String),
}

impl BenchError {
    /// Process exit code contract: 1 for validation, 2 for runtime.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Validation(_) => 1,
            BenchError::Runtime(_) => 2,
        }
    }
}

/// Wraps any displayable error as a validation failure.
pub fn validation(e: impl Display) -> BenchError {
    BenchError::Validation(e.to_string())
}

/// Wraps any displayable error as a runtime failure.
pub fn runtime(e: impl Display) -> BenchError {
    BenchError::Runtime(e.to_string())
}

pub type Result<T> = std::result::Result<T, BenchError>;
