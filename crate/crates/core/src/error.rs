use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {actual}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        actual: usize,
    },

    #[error("chunk {index}: {message}")]
    InvalidChunk { index: usize, message: String },

    #[error("empty stream")]
    EmptyStream,

    #[error("empty pool")]
    EmptyPool,

    #[error("empty batch")]
    EmptyBatch,

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("index {index} out of range for {len} tokens")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("temperature must be positive, got {0}")]
    NonPositiveTemperature(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("support violation at index {index}: q is zero where p = {p}")]
    SupportViolation { index: usize, p: f64 },

    #[error("infeasible synthetic spec: {0}")]
    InfeasibleSpec(String),

    #[error("zero original {0} tokens")]
    ZeroOriginals(&'static str),

    #[error(transparent)]
    Format(#[from] FormatError),
}

/// Failures while decoding or encoding the binary file formats.
#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported {format} format version {found} (supported: {supported})")]
    UnsupportedVersion {
        format: &'static str,
        found: u32,
        supported: u32,
    },

    #[error("truncated file while reading {context}: needed {needed} more bytes")]
    Truncated { context: String, needed: u64 },

    #[error("dimension overflow: {0}")]
    DimensionOverflow(String),

    #[error("unsupported flags {0:#x}")]
    UnsupportedFlags(u32),

    #[error("unsupported architecture byte {0}")]
    UnsupportedArchitecture(u8),

    #[error("{0} trailing bytes after payload")]
    TrailingData(u64),

    #[error("malformed record: {0}")]
    Malformed(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<io::Error> for Error {
    fn from(e: io::Error) -> Self {
        Error::Format(FormatError::Io(e))
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(FormatError::Json(e))
    }
}
