use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("spectrum centred at {center_nm} nm has no support on the {start_nm}-{end_nm} nm grid")]
    SpectrumOutsideGrid { center_nm: f64, start_nm: f64, end_nm: f64 },

    #[error("tristimulus sum is zero")]
    ZeroTristimulus,

    #[error("pupil cutoff {cutoff} rad/um exceeds grid Nyquist {nyquist} rad/um")]
    CutoffExceedsNyquist { cutoff: f64, nyquist: f64 },

    #[error("illumination shift ({sx}, {sy}) px pushes the {window}-px window off a {grid}-px spectrum")]
    ShiftOffGrid {
        sx: i64,
        sy: i64,
        window: usize,
        grid: usize,
    },

    #[error("donor image is empty")]
    EmptyDonor,

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

/// Coarse classification used by the command line to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Io,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Io { .. } | Error::Format { .. } => ErrorKind::Io,
            _ => ErrorKind::Numerical,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format {
            path: path.into(),
            message: message.to_string(),
        }
    }
}
