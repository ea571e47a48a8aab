use std::io;
use std::path::PathBuf;

/// Failures while reading or writing an attention dump directory.
#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error("missing file {0}")]
    MissingFile(PathBuf),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    /// Declared shapes disagree with each other or with the payload size.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invariant violation in {tensor} at index {index}: {detail}")]
    InvariantViolation {
        tensor: &'static str,
        index: usize,
        detail: String,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl From<attnground_core::Error> for DumpError {
    fn from(e: attnground_core::Error) -> Self {
        use attnground_core::Error as E;
        match e {
            E::ShapeMismatch(m) => DumpError::ShapeMismatch(m),
            E::InvariantViolation { tensor, index, detail } => DumpError::InvariantViolation { tensor, index, detail },
            other => DumpError::MalformedHeader(other.to_string()),
        }
    }
}

/// Everything the tooling layer can fail with.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Dump(#[from] DumpError),

    #[error(transparent)]
    Core(#[from] attnground_core::Error),

    /// A JSON or JSONL input does not match its schema.
    #[error("{path}:{line}: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("no OCR file for screenshot {screenshot} (expected {expected})")]
    MissingOcr { screenshot: PathBuf, expected: PathBuf },

    #[error("image {path}: {message}")]
    Image { path: PathBuf, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("usage: {0}")]
    Usage(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
