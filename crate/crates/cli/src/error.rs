//! Process-level error classes and their exit codes.

use std::path::Path;

/// Exit code for filesystem and serialization failures.
pub const EXIT_IO: i32 = 10;
/// Exit code for violated preconditions, malformed inputs, and artifact
/// integrity failures.
pub const EXIT_CONTRACT: i32 = 11;
/// Exit code for aborted training runs (non-finite loss).
pub const EXIT_DIVERGENCE: i32 = 12;

/// Everything a command can fail with, bucketed by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Contract(String),
    #[error("{0}")]
    Divergence(String),
}

impl CliError {
    pub fn io(message: impl Into<String>) -> Self {
        CliError::Io(message.into())
    }

    pub fn contract(message: impl Into<String>) -> Self {
        CliError::Contract(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Contract(_) => EXIT_CONTRACT,
            CliError::Divergence(_) => EXIT_DIVERGENCE,
        }
    }

    pub fn class(&self) -> &'static str {
        match self {
            CliError::Io(_) => "io",
            CliError::Contract(_) => "contract",
            CliError::Divergence(_) => "divergence",
        }
    }
}

impl From<mpcs_core::Error> for CliError {
    fn from(err: mpcs_core::Error) -> Self {
        match err {
            mpcs_core::Error::Divergence { .. } => CliError::Divergence(err.to_string()),
            other => CliError::Contract(other.to_string()),
        }
    }
}

/// Wraps an I/O result with the path that failed.
pub fn io_at<T>(result: std::io::Result<T>, action: &str, path: &Path) -> Result<T, CliError> {
    result.map_err(|e| CliError::Io(format!("{action} {}: {e}", path.display())))
}
