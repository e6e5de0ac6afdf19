use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("jet order {order} exceeds the configured cap {cap}")]
    OrderCap { order: usize, cap: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("substitution error: {0}")]
    Substitution(String),

    #[error("unsupported input: {0}")]
    Unsupported(String),

    #[error("{line}:{column}: syntax error: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
        expected: Vec<String>,
    },

    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),

    #[error("duplicate definition of `{0}`")]
    Duplicate(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
