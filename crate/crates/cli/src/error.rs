use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] qtrap::Error),

    #[error("tolerance exceeded: {0}")]
    Tolerance(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// CSV errors on a file: I/O failures stay I/O, malformed content is a
    /// validation failure.
    pub fn csv(path: &Path, err: csv::Error) -> Self {
        if err.is_io_error() {
            match err.into_kind() {
                csv::ErrorKind::Io(source) => Self::io(path, source),
                _ => unreachable!("is_io_error checked"),
            }
        } else {
            Self::Config(format!("{}: {err}", path.display()))
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Core(_) => 1,
            CliError::Tolerance(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}
