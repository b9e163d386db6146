use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the engine can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("dataset {0} contains no interactions")]
    EmptyDataset(String),

    #[error("no overlapping users (domain X has {users_x} users, domain Y has {users_y})")]
    Alignment { users_x: usize, users_y: usize },

    #[error("graph construction: interaction (user {user}, item {item}) out of range for {num_users} users x {num_items} items")]
    GraphIndex { user: usize, item: usize, num_users: usize, num_items: usize },

    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    Shape { op: &'static str, left: (usize, usize), right: (usize, usize) },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value in {0}")]
    Numeric(String),

    #[error("negative sampling: user {user} has interacted with all {num_items} items")]
    Sampling { user: usize, num_items: usize },

    #[error("checkpoint {path}: {kind}")]
    Checkpoint { path: PathBuf, kind: CheckpointErrorKind },

    #[error("evaluation: {0}")]
    Evaluation(String),

    #[error("lookup: {0}")]
    Lookup(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CheckpointErrorKind {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("file truncated")]
    Truncated,
    #[error("malformed config blob: {0}")]
    Config(String),
    #[error("parameter {name} does not match the configured shape")]
    ShapeMismatch { name: String },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn shape(op: &'static str, left: (usize, usize), right: (usize, usize)) -> Self {
        Error::Shape { op, left, right }
    }

    pub(crate) fn checkpoint(path: impl Into<PathBuf>, kind: CheckpointErrorKind) -> Self {
        Error::Checkpoint { path: path.into(), kind }
    }
}
