use std::path::{Path, PathBuf};

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Failure category, mapped to the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Validation,
    Io,
    Numeric,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Validation => 2,
            Category::Io => 3,
            Category::Numeric => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] contivae::Error),

    #[error("invalid configuration: {0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn validation(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn category(&self) -> Category {
        match self {
            CliError::Core(e) if e.is_numeric() => Category::Numeric,
            CliError::Core(e) if e.is_io() => Category::Io,
            CliError::Core(_) | CliError::Validation(_) => Category::Validation,
            CliError::Io { .. } => Category::Io,
        }
    }
}
