use thiserror::Error;

/// Errors raised by the design-search library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation produced a non-finite or otherwise unusable number.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The object is not in a state that permits the operation.
    #[error("state error: {0}")]
    State(String),

    /// The requested computation is not supported at this size.
    #[error("capability error: {0}")]
    Capability(String),

    /// A configuration value is invalid or leads to a degenerate computation.
    #[error("configuration error: {0}")]
    Config(String),

    /// Checkpoint text could not be parsed.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}
