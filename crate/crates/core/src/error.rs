use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("framing error: {0}")]
    Framing(String),

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: String, actual: String },

    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    #[error("{func} did not converge within {terms} terms (a = {a}, z = {z})")]
    NoConvergence {
        func: &'static str,
        a: f64,
        z: f64,
        terms: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Wav(#[from] WavError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn shape(expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

/// Errors raised while parsing or writing RIFF/WAVE PCM data.
#[derive(Debug, Error)]
pub enum WavError {
    #[error("not a RIFF/WAVE file")]
    NotRiffWave,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported encoding: format tag {format_tag}, {bits_per_sample} bits per sample (only 16-bit PCM is supported)")]
    UnsupportedEncoding {
        format_tag: u16,
        bits_per_sample: u16,
    },
    #[error("unsupported channel count {0}: only mono is accepted")]
    NotMono(u16),
    #[error("missing {0} chunk")]
    MissingChunk(&'static str),
    #[error(
        "truncated data chunk: header declares {expected} bytes but only {actual} are present"
    )]
    TruncatedData { expected: usize, actual: usize },
}
