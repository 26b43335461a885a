use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Inconsistent dimensions, structures or settings.
    #[error("configuration error: {0}")]
    Config(String),

    /// Argument outside the domain of a physical formula.
    #[error("domain error: {0}")]
    Domain(String),

    /// API misuse, e.g. a non-scalar loss or an unknown scheme tag.
    #[error("usage error: {0}")]
    Usage(String),

    /// An over-the-air estimate that cannot be formed.
    #[error("estimation error: {0}")]
    Estimation(String),

    /// A solver hit a degenerate channel (zero denominators).
    #[error("degenerate channel: {0}")]
    Degenerate(String),

    /// A forward or backward pass produced NaN or infinity.
    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },

    /// Training produced a non-finite loss or gradient.
    #[error("training diverged at iteration {iteration} (batch seed {batch_seed}): non-finite value from {op}")]
    Diverged { iteration: usize, batch_seed: u64, op: &'static str },

    /// Malformed or incompatible dataset/checkpoint content.
    #[error("data error: {0}")]
    Data(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
