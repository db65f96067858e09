use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid subset: {0}")]
    Subset(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("index out of range: {0}")]
    Index(String),
    #[error("correlation is undefined for a zero vector")]
    ZeroVector,
    #[error("operation requires a dense tensor, but none is attached")]
    MissingDense,
    #[error("degenerate solve: {0}")]
    Degenerate(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for the CLI: 2 for invalid inputs/config, 3 for
    /// capacity limits, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Capacity(_) => 3,
            Error::Io(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn parameter(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
