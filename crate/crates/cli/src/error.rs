use thiserror::Error;

/// Everything that can stop a command before it produces its output.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] mordell_core::Error),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid JSON config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("output failed: {0}")]
    Output(String),
}

pub const EXIT_OK: u8 = 0;
pub const EXIT_VERIFY_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;

/// Whether a core error means "ran out of work or accuracy" rather than "bad input".
pub fn is_convergence(e: &mordell_core::Error) -> bool {
    matches!(
        e,
        mordell_core::Error::ConvergenceFailure { .. } | mordell_core::Error::NonConvergence { .. } | mordell_core::Error::NonFinite { .. }
    )
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if is_convergence(e) => EXIT_NOT_CONVERGED,
            _ => EXIT_USAGE,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
