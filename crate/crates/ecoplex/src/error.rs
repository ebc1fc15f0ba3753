use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    /// A check or computation completed but its outcome is a failure.
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Core(#[from] ecoplex_core::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Self::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// 1 for computation failures, 2 for usage, input and IO problems.
    pub fn exit_code(&self) -> i32 {
        use ecoplex_core::Error as E;
        match self {
            Self::Io { .. } | Self::Format { .. } | Self::Usage(_) => 2,
            Self::Core(
                E::InvalidRecord { .. }
                | E::DuplicateKey { .. }
                | E::UnknownCode(_)
                | E::InvalidParameter(_)
                | E::EntryPresent { .. },
            ) => 2,
            Self::Core(_) | Self::Failed(_) => 1,
        }
    }
}
