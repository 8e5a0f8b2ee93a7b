use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] mixcorr::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 1 usage, 2 runtime, 3 I/O, 4 tag-file format, 5 empty channel.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io { .. } | CliError::Core(mixcorr::Error::Io { .. }) => 3,
            CliError::Core(mixcorr::Error::Format(_)) => 4,
            CliError::Core(mixcorr::Error::EmptyChannel { .. }) => 5,
            CliError::Core(_) => 2,
        }
    }
}
