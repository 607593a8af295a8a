use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("url {url} maps to both {first} and {second}")]
    AmbiguousUrl {
        url: String,
        first: String,
        second: String,
    },

    #[error("no main entity for page {0}")]
    NoMainEntity(String),

    #[error("malformed dependency tree in sentence {sent_id}: {msg}")]
    MalformedTree { sent_id: String, msg: String },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("training set contains a single class")]
    SingleClass,

    #[error("optimizer did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NonConvergence { iterations: usize, grad_norm: f64 },

    #[error("empty test set")]
    EmptyTestSet,

    #[error("experiment cell {cell}: {msg}")]
    MissingInput { cell: String, msg: String },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("bad model or filter file: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }
}
