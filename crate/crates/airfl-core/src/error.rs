//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Vector or matrix dimensions do not agree.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The requested operation is not defined for this configuration
    /// (e.g. a single-antenna scheme asked to run with M > 1).
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    /// Equalizer is orthogonal to an active device's channel.
    #[error("degenerate equalizer: {0}")]
    DegenerateEqualizer(String),

    /// Input outside the mathematical domain of a special function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A stated precondition of an analysis or solver does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Failure during a training round, annotated with its origin.
    #[error("round {round} ({scheme}): {source}")]
    Round {
        round: usize,
        scheme: String,
        #[source]
        source: Box<Error>,
    },

    /// Configuration rejected; all collected problems, not just the first.
    #[error("configuration invalid:\n{}", .0.join("\n"))]
    ConfigValidation(Vec<String>),

    /// Configuration file could not be parsed.
    #[error("configuration parse error: {0}")]
    ConfigParse(String),

    /// I/O failure with the offending path attached.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Wrap an error with the round index and scheme id it occurred in.
    pub fn in_round(self, round: usize, scheme: &str) -> Self {
        Error::Round {
            round,
            scheme: scheme.to_string(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
