use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("mode error: {0}")]
    Mode(String),

    #[error("degenerate trial {index}: all entries are zero")]
    DegenerateTrial { index: usize },

    #[error("insufficient length: {samples} samples, need more than {order}")]
    InsufficientLength { samples: usize, order: usize },

    #[error("range error: window for cue {cue_index} (sample {cue}) exceeds recording of {len} samples")]
    Range { cue_index: usize, cue: usize, len: usize },

    #[error("format error at byte {offset}: {msg}")]
    Format { offset: u64, msg: String },

    #[error("parse error at line {line}{}: {msg}", .column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse { line: u64, column: Option<usize>, msg: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: non-finite loss at epoch {epoch}, batch {batch}")]
    NonFinite { epoch: usize, batch: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
