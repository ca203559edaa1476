//! Shared error type for the toolkit.

/// Errors produced by fitting, assessment, guarantee, and data operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration that can never produce a valid result, such as
    /// requesting more bins than the sample size supports or an
    /// unsatisfiable bound inversion.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// An input value outside its documented domain (for example a score
    /// outside `[0, 1]` or a non-finite feature).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Malformed external data (CSV contents, model files, config files).
    #[error("data error: {0}")]
    Data(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
