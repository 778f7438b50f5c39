use thiserror::Error;

/// Errors shared across the probability primitives, samplers and file
/// formats.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Every candidate weight of a full conditional is zero, so the site
    /// cannot be resampled.
    #[error("degenerate conditional: {0}")]
    DegenerateConditional(String),

    /// Incrementally maintained counters disagree with the path set they
    /// are supposed to summarize.
    #[error("internal consistency: {0}")]
    InternalConsistency(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }
}
