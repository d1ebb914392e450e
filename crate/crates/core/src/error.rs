use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("graph has no edges; the modularity normalizer 1/(2m) is undefined")]
    EmptyGraph,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("node {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },

    #[error("pair ({i}, {j}) is a self-pair")]
    SelfPair { i: usize, j: usize },

    #[error("pair {{{i}, {j}}} carries conflicting signs")]
    ConflictingPair { i: usize, j: usize },

    #[error("pair {{{i}, {j}}} appears more than once")]
    DuplicatePair { i: usize, j: usize },

    #[error("unknown node id {0}")]
    UnknownNode(u64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite values in embedding at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("bad embedding file: {0}")]
    BadFormat(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::DimensionMismatch {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }
}
