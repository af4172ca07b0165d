use std::io;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error(transparent)]
    Core(#[from] ssam_core::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Stable category printed in front of the message.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Format { .. } => "format",
            CliError::Core(ssam_core::Error::Parse { .. }) => "parse",
            CliError::Core(ssam_core::Error::Divergence { .. }) => "divergence",
            CliError::Core(_) => "validation",
            CliError::Usage(_) => "usage",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl ToString) -> CliError {
        CliError::Format {
            path: path.into(),
            msg: msg.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
