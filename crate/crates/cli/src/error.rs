use std::path::PathBuf;

use qus_core::QusError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{}: {msg}", location(.path, *.line))]
    Config { path: PathBuf, line: usize, msg: String },

    #[error("file not found: {}", .0.display())]
    MissingPath(PathBuf),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}:{col}: {msg}", .path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        col: usize,
        msg: String,
    },

    #[error(transparent)]
    Data(#[from] QusError),

    #[error("{0}")]
    Convergence(String),
}

fn location(path: &std::path::Path, line: usize) -> String {
    if line == 0 {
        path.display().to_string()
    } else {
        format!("{}:{line}", path.display())
    }
}

impl CliError {
    /// 1 usage or configuration, 2 data, 3 convergence failure under `--strict`.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config { .. } | CliError::MissingPath(_) => 1,
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Data(_) => 2,
            CliError::Convergence(_) => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
