//! Error types shared across the toolchain.

use thiserror::Error;

/// Unified error type for the core library.
#[derive(Debug, Error)]
pub enum Error {
    /// WAV header could not be parsed as RIFF/WAVE.
    #[error("malformed WAV: {0}")]
    MalformedWav(String),

    /// WAV is structurally valid but uses a codec we do not decode.
    #[error("unsupported WAV codec: {0}")]
    UnsupportedWavCodec(String),

    /// WAV data chunk holds zero samples.
    #[error("WAV data chunk is empty")]
    EmptyWav,

    /// Invalid parameters, configuration, or schema violations.
    #[error("invalid input: {0}")]
    Validation(String),

    /// The data itself is unusable (bad manifest, rate mismatch, empty set).
    #[error("data error: {0}")]
    Data(String),

    /// Shape mismatch between two numeric objects.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A training routine failed to converge or diverged.
    #[error("training failed: {0}")]
    Convergence(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    /// Stable process exit code for the CLI contract:
    /// 1 validation, 2 data, 3 convergence/training.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_) | Error::Serde(_) => 1,
            Error::MalformedWav(_)
            | Error::UnsupportedWavCodec(_)
            | Error::EmptyWav
            | Error::Data(_)
            | Error::Dimension { .. }
            | Error::Io(_) => 2,
            Error::Convergence(_) => 3,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
