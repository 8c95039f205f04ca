use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input image")]
    EmptyImage,
    #[error("pixel buffer holds {actual} values, expected {expected} for the given dimensions")]
    BufferSize { expected: usize, actual: usize },
    #[error("binary image values must be 0 or 1, found {0}")]
    NotBinary(u8),
    #[error("contrast factor must be positive")]
    NonPositiveContrast,
    #[error("target dimensions must be at least 1x1")]
    InvalidTarget,
    #[error("mask/image dimension mismatch")]
    MaskMismatch,
    #[error("invalid bin count {0}: must lie in 1..=256 and divide 256")]
    InvalidBins(usize),
    #[error("no samples")]
    NoSamples,
    #[error("invalid bounds")]
    InvalidBounds,
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cluster index {index} out of range for {clusters} clusters")]
    ClusterOutOfRange { index: usize, clusters: usize },
    #[error("untrained model")]
    UntrainedModel,
    #[error("{samples} samples but {labels} labels")]
    LengthMismatch { samples: usize, labels: usize },
    #[error("need at least {needed} samples, got {actual}")]
    TooFewSamples { needed: usize, actual: usize },
    #[error("directory not found: {}", .0.display())]
    MissingDirectory(PathBuf),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("{}: line {line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
}

/// Coarse grouping used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Missing or malformed input data, I/O failures.
    Data,
    /// Shape, configuration and numeric contract violations.
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::MissingDirectory(_)
            | Error::EmptyDataset
            | Error::Parse { .. }
            | Error::Io { .. }
            | Error::Image { .. }
            | Error::NoSamples
            | Error::EmptyImage => ErrorClass::Data,
            _ => ErrorClass::Numeric,
        }
    }

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
