use thiserror::Error;

/// Errors produced anywhere in the crate.
///
/// The CLI maps these onto exit codes: configuration problems exit with 2,
/// data/IO problems with 3, and numerical failures (non-positive-definite
/// covariances, unusable tails) with 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("covariance is not positive definite ({context})")]
    NotPositiveDefinite { context: &'static str },

    #[error("invalid parameter {name}: {message}")]
    InvalidParameter { name: &'static str, message: String },

    #[error("cannot remove an observation from empty sufficient statistics")]
    EmptyStats,

    #[error("empty data: {0}")]
    EmptyData(&'static str),

    #[error("insufficient tail points: need {needed}, have {have}")]
    InsufficientTail { needed: usize, have: usize },

    #[error("probability out of range: {0}")]
    ProbabilityRange(f64),

    #[error("batch prefix too small: need at least {minimum} points, have {have}")]
    BatchTooSmall { minimum: usize, have: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("snapshot error: {0}")]
    Snapshot(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code for the CLI failure classes.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter { .. } => 2,
            Error::Data(_) | Error::Io { .. } | Error::Snapshot(_) | Error::EmptyData(_) => 3,
            _ => 4,
        }
    }
}
