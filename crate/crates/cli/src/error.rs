use std::process::ExitCode;

use onred_core::Error as CoreError;
use thiserror::Error;

/// CLI failures, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid flags or configuration (exit code 2).
    #[error("{0}")]
    Config(String),
    /// The solver produced non-finite iterates (exit code 3).
    #[error("{0}")]
    Numerical(String),
    /// Unreadable or unwritable files (exit code 4).
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Numerical(_) => ExitCode::from(3),
            CliError::Io(_) => ExitCode::from(4),
        }
    }

    pub fn io(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::NumericalAbort { .. } => CliError::Numerical(err.to_string()),
            CoreError::Io(_) | CoreError::Format(_) => CliError::Io(err.to_string()),
            _ => CliError::Config(err.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
