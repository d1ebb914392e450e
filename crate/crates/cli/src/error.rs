use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] fuse_core::Error),

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Config { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("output check failed for {path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn missing(flag: &str) -> Self {
        CliError::Usage(format!("--{flag} is required (flag or config key {flag:?})"))
    }

    /// Stable short tag for the machine-readable error line.
    pub fn kind(&self) -> &'static str {
        use fuse_core::Error as E;
        match self {
            CliError::Core(e) => match e {
                E::Io { .. } => "io",
                E::Parse { .. } => "parse",
                E::BadFormat(_) => "format",
                E::EmptyGraph => "empty-graph",
                E::DimensionMismatch { .. } => "dimension",
                E::NodeOutOfRange { .. } | E::UnknownNode(_) => "node",
                E::SelfPair { .. } | E::ConflictingPair { .. } | E::DuplicatePair { .. } => "pairs",
                E::InvalidArgument(_) => "invalid-argument",
                E::NonFinite { .. } => "non-finite",
            },
            CliError::Usage(_) => "usage",
            CliError::Config { .. } => "config",
            CliError::Io { .. } => "io",
            CliError::Output { .. } => "output",
        }
    }

    /// `error[<kind>]: <message>` on one line.
    pub fn one_line(&self) -> String {
        let message = self.to_string().replace(['\n', '\r'], " ");
        format!("error[{}]: {}", self.kind(), message)
    }
}
