//! Error type shared across the pipeline.

use thiserror::Error;

/// Errors reported by the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Input was empty where data is required.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    /// Input was too short for the requested operation.
    #[error("{what}: need at least {need} samples, got {got}")]
    TooShort {
        what: &'static str,
        need: usize,
        got: usize,
    },
    /// A configuration field was out of range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    /// A sample was NaN or infinite.
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    /// Signal power is zero where a reference level is required.
    #[error("zero-power input: {0}")]
    ZeroPower(&'static str),
    /// Symbol alignment against the reference sequence failed.
    #[error("alignment failed: normalized correlation {corr:.3} below {threshold:.3}")]
    AlignmentFailed { corr: f64, threshold: f64 },
    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: {detail}")]
    Diverged { epoch: usize, detail: String },
    /// Checkpoint bytes were malformed or of the wrong kind.
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
