use thiserror::Error;

/// Errors produced anywhere in the tracking pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line} (byte offset {offset}): {msg}")]
    Parse {
        line: usize,
        offset: usize,
        msg: String,
    },

    #[error("out of bounds: {0}")]
    Bounds(String),

    #[error("ordering violation: {0}")]
    Ordering(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("invalid tracker state: {0}")]
    State(String),

    #[error("out of range: {0}")]
    Range(String),

    #[error("lookup failed: {0}")]
    Lookup(String),

    #[error("degenerate interval: {0}")]
    DegenerateInterval(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
