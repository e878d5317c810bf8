use thiserror::Error;

use crate::algorithms::Trace;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Caller violated a precondition (dimension mismatch, parameter out of range, ...).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A function evaluation produced a non-finite value.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// The request is well formed but beyond what the implementation can do,
    /// e.g. enumerating an outcome space that is too large.
    #[error("capability error: {0}")]
    Capability(String),

    /// The iterate left the finite region. The partial trace up to the last
    /// finite record is retained.
    #[error("run diverged at iteration {iteration}")]
    Diverged { iteration: usize, trace: Box<Trace> },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
