use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameter or argument rejected before any computation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A grid cannot represent the requested state.
    #[error("resolution: {0}")]
    Resolution(String),

    /// A quadrature or solver failed its internal accuracy check.
    #[error("accuracy: {0}")]
    Accuracy(String),

    /// Mode populations spilled past the retained basis.
    #[error("mode spill: {0}")]
    Spill(String),

    /// Config file problem, with the 1-based line it was found on.
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
