//! Library side of the `sorption` command-line tool: configuration parsing,
//! output files and the `run` / `converge` / `validate` commands.

pub mod commands;
pub mod config;
pub mod output;

use sorption_core::error::Error as CoreError;
use thiserror::Error;

/// Failures mapped onto process exit codes.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid configuration or unusable input/output location.
    #[error("{0}")]
    Input(String),

    #[error("{0}")]
    Solver(CoreError),

    /// A built-in check or audit did not hold.
    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Input(_) => 2,
            CliError::Solver(_) => 3,
        }
    }

    pub(crate) fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::NonConvergence { .. } | CoreError::NonFiniteEnergy { .. } => CliError::Solver(e),
            other => CliError::Input(other.to_string()),
        }
    }
}
