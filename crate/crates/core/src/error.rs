use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the JPEG codec.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("invalid quality {0}: must be in [1, 100]")]
    InvalidQuality(u32),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("unsupported JPEG feature at byte {offset}: {feature}")]
    Unsupported { offset: usize, feature: String },
}

impl CodecError {
    pub(crate) fn parse(offset: usize, message: impl Into<String>) -> Self {
        CodecError::Parse {
            offset,
            message: message.into(),
        }
    }

    pub(crate) fn unsupported(offset: usize, feature: impl Into<String>) -> Self {
        CodecError::Unsupported {
            offset,
            feature: feature.into(),
        }
    }

    /// Byte offset of a parse or unsupported-feature error.
    pub fn offset(&self) -> Option<usize> {
        match self {
            CodecError::Parse { offset, .. } | CodecError::Unsupported { offset, .. } => {
                Some(*offset)
            }
            _ => None,
        }
    }
}

/// Top-level error type for the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: {left_width}x{left_height} vs {right_width}x{right_height}")]
    DimensionMismatch {
        left_width: usize,
        left_height: usize,
        right_width: usize,
        right_height: usize,
    },
    #[error("no interior extremum in either the SSIM or the energy curve")]
    EstimationFailure,
    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
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

    /// Message including every underlying cause.
    pub fn chain(&self) -> String {
        let mut out = self.to_string();
        let mut cause = std::error::Error::source(self);
        while let Some(c) = cause {
            out.push_str(": ");
            out.push_str(&c.to_string());
            cause = c.source();
        }
        out
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Error::InvalidInput(message.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
