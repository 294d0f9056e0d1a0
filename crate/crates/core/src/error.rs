use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("singular stepsize denominator (x'Px + c_v = 0)")]
    SingularDenominator,

    #[error("degenerate ensemble: mean squared error is zero across all trials")]
    DegenerateEnsemble,

    #[error("degenerate scenario: {0}")]
    DegenerateScenario(String),

    #[error("undefined reference: true impulse response has zero norm")]
    UndefinedReference,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite sample at index {index} in {label} stream")]
    NonFinite { label: String, index: usize },

    #[error(transparent)]
    Wav(#[from] WavError),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error on {path}: {message}")]
    Csv { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
        if expected == got {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, got })
        }
    }
}

#[derive(Debug, Error)]
pub enum WavError {
    #[error("malformed WAV header in {path}: {detail}")]
    MalformedHeader { path: PathBuf, detail: String },

    #[error("unsupported WAV encoding in {path}: {detail}")]
    UnsupportedEncoding { path: PathBuf, detail: String },

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
