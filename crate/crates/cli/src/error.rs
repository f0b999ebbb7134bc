use thiserror::Error;

/// Failures surfaced by the command line, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<obsdesign::Error> for CliError {
    fn from(err: obsdesign::Error) -> Self {
        match err {
            obsdesign::Error::Config(_) | obsdesign::Error::Parse { .. } => CliError::Config(err.to_string()),
            _ => CliError::Runtime(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {err}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(err: csv::Error) -> Self {
        CliError::Runtime(format!("csv error: {err}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
