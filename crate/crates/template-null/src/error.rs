use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input row, reported with its 1-based line number.
    #[error("parse error at {path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("invalid data: {0}")]
    Validation(String),

    #[error("invalid design: {0}")]
    Design(String),

    #[error("design mismatch: {0}")]
    DesignMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("template artifact: {0}")]
    Artifact(String),

    #[error("sampler: {0}")]
    Sampler(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
