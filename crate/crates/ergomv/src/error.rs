use std::path::PathBuf;

use ergomv_core::Error as CoreError;

/// Failures surfaced by the command-line layer, each mapped to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("{0}")]
    Divergence(CoreError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0} check(s) failed")]
    ChecksFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 1,
            Self::Divergence(_) => 2,
            Self::Io { .. } => 3,
            Self::ChecksFailed(_) => 4,
        }
    }

    pub fn validation(msg: impl Into<String>) -> Self {
        Self::Validation(vec![msg.into()])
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Divergence { .. } => Self::Divergence(e),
            other => Self::Validation(vec![other.to_string()]),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
