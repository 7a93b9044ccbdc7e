use thiserror::Error;

/// Errors raised by the library. Resource guards are reported as their own
/// variant so callers can tell "too big" apart from "malformed".
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("resource guard: {0}")]
    Resource(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("domain mismatch: expected {expected}, found {found}")]
    DomainMismatch { expected: usize, found: usize },

    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("unknown relation `{0}`")]
    UnknownRelation(String),

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("verification failed: {0}")]
    Verification(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }
}
