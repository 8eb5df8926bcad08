use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by every stage of the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("I/O error: {0}")]
    Stream(#[from] io::Error),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("dimension mismatch at line {line}: expected {expected} values, found {found}")]
    LineDimension {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("empty sentence at line {line}: no token contributed a vector")]
    EmptySentence { line: usize },

    #[error("empty signal: the DCT needs at least one sample")]
    EmptySignal,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid file format: {0}")]
    Format(String),

    #[error("alignment input error: {0}")]
    AlignmentInput(String),

    #[error("rank-deficient system ({rank} of {dim}); use a ridge > 0")]
    RankDeficient { rank: usize, dim: usize },

    #[error("invalid numeric input: {0}")]
    InvalidInput(String),

    #[error("degenerate task: {0}")]
    DegenerateTask(String),

    #[error("dataset error: {0}")]
    Dataset(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 usage, 2 data/parse, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::RankDeficient { .. }
            | Error::InvalidInput(_)
            | Error::EmptySignal
            | Error::DegenerateTask(_) => 3,
            _ => 2,
        }
    }
}
