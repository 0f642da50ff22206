use otkit_core::OtError;
use thiserror::Error;

/// Failures of a subcommand, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Parse { path: String, source: OtError },

    #[error("{0}")]
    Io(String),

    #[error("solver: {0}")]
    Solver(#[from] OtError),
}

impl CliError {
    /// 1 for usage errors, 2 for unreadable or malformed inputs and
    /// unwritable outputs, 3 for solver errors.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Parse { .. } | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
