use std::path::PathBuf;

/// Errors produced by the estimation pipeline and its I/O layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimensions {width}x{height} are too small (minimum 2x2)")]
    DimensionTooSmall { width: usize, height: usize },

    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("invalid stereo rig: {0}")]
    InvalidRig(String),

    #[error("invalid rigid motion: {0}")]
    InvalidMotion(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point maps to infinity (fourth homogeneous component {w:e})")]
    PointAtInfinity { w: f64 },

    #[error("point lies behind the camera (depth {depth})")]
    BehindCamera { depth: f64 },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("{path}: unsupported image layout {found}, expected {expected}")]
    Format {
        path: PathBuf,
        found: String,
        expected: &'static str,
    },

    #[error("disparity {value} at ({x}, {y}) cannot be encoded as a 16-bit disparity value")]
    DisparityRange { x: usize, y: usize, value: f64 },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
