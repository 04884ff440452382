use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Everything that can go wrong between reading a manifest and writing a plot.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unsupported codec in {path}: {codec}")]
    UnsupportedCodec { path: PathBuf, codec: String },

    #[error("failed to decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("sample rate {0} Hz is below the 8000 Hz minimum")]
    SampleRate(u32),

    #[error("clip of {samples} samples is shorter than one {needed}-sample frame")]
    TooShort { samples: usize, needed: usize },

    #[error("frequency must be positive, got {0} Hz")]
    Domain(f64),

    #[error("manifest validation failed: {0}")]
    Manifest(String),

    #[error("degenerate input{}: {reason}", piece.as_ref().map(|p| format!(" for piece {p}")).unwrap_or_default())]
    Degenerate {
        piece: Option<String>,
        reason: String,
    },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("empty triangle: no placements in the {0} side of the map")]
    EmptyTriangle(&'static str),

    #[error("store error: {0}")]
    Store(String),

    #[error("config hash mismatch: {path} was written with {found}, current config is {expected}")]
    ConfigMismatch {
        path: PathBuf,
        found: String,
        expected: String,
    },

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn degenerate(piece: Option<&str>, reason: impl Into<String>) -> Self {
        Error::Degenerate {
            piece: piece.map(str::to_owned),
            reason: reason.into(),
        }
    }

    /// `true` for errors caused by user-supplied parameters rather than data.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Parameter(_) | Error::Manifest(_) | Error::ConfigMismatch { .. }
        )
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serde(e.to_string())
    }
}
