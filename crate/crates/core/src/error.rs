use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions {rows}x{cols}: both must be at least 1")]
    InvalidDimensions { rows: usize, cols: usize },

    #[error("data length {len} does not match {rows}x{cols}")]
    LengthMismatch { rows: usize, cols: usize, len: usize },

    #[error("non-finite value at row {row}, col {col}")]
    NonFinite { row: usize, col: usize },

    #[error("shape mismatch in {what}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        what: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("bad magic {:?}, expected \"SGF1\"", String::from_utf8_lossy(.0))]
    BadMagic([u8; 4]),

    #[error("truncated file: expected {expected} bytes, found {found}")]
    Truncated { expected: u64, found: u64 },

    #[error("dimensions {rows}x{cols} overflow the addressable payload size")]
    DimensionOverflow { rows: u64, cols: u64 },

    #[error("{extra} unexpected bytes after payload")]
    TrailingData { extra: u64 },

    #[error("noise variance f*exp(p/eta) overflows at row {row}, col {col} (p = {value})")]
    NumericalOverflow { row: usize, col: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("profile is flat; edge width undefined")]
    FlatProfile,

    #[error("unknown method {0:?}; valid methods: none, med, llmmse, llmmse-raw, llmmse-b")]
    UnknownMethod(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 usage/config, 3 data format or I/O, 4 numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidDimensions { .. }
            | Error::InvalidParameter(_)
            | Error::IndexOutOfRange(_)
            | Error::UnknownMethod(_)
            | Error::Config(_) => 2,
            Error::LengthMismatch { .. }
            | Error::ShapeMismatch { .. }
            | Error::BadMagic(_)
            | Error::Truncated { .. }
            | Error::DimensionOverflow { .. }
            | Error::TrailingData { .. }
            | Error::Io { .. } => 3,
            Error::NonFinite { .. } | Error::NumericalOverflow { .. } | Error::FlatProfile => 4,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
