//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Structural misuse: mismatched shapes, invalid layer chains, bad
    /// hyperparameter combinations.
    #[error("configuration error: {0}")]
    Config(String),

    /// Training produced a non-finite quantity.
    #[error("training diverged at step {step}: {msg}")]
    Divergence { step: u64, msg: String },

    /// A numerical contract was violated outside of training steps.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A consolidation task boundary could not be completed.
    #[error("task boundary failed at step {step}: {msg}")]
    Boundary { step: u64, msg: String },

    /// Metric prerequisites (e.g. the mode classifier) could not be set up.
    #[error("metric setup failed: {0}")]
    MetricSetup(String),

    /// Snapshotting generator output failed.
    #[error("snapshot failed at iteration {iteration}: {msg}")]
    Snapshot { iteration: u64, msg: String },

    /// Invalid argument to an evaluation entry point.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// Malformed textual input (config files, CSV dumps).
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to: 1 for validation
    /// problems the user can fix in the invocation, 2 for runtime failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) | Error::Argument(_) | Error::Parse { .. } => 1,
            _ => 2,
        }
    }
}
