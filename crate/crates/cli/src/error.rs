use std::path::Path;

use thiserror::Error;

/// Command failure, mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input data, model or flags.
    #[error("{0}")]
    Input(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// Coupled simulation found K increasing with sigma.
    #[error("{violations} coupled replicate/sigma pairs had larger K at larger sigma")]
    TheoremViolation { violations: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Io { .. } => 3,
            CliError::TheoremViolation { .. } => 4,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

impl From<isorecal_core::Error> for CliError {
    fn from(e: isorecal_core::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
