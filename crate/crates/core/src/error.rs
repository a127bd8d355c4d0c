use thiserror::Error;

use crate::grid::TilingKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid level count {0}: expected 2..=255")]
    InvalidLevels(usize),

    #[error("invalid {kind:?} grid spec: {reason}")]
    InvalidSpec { kind: TilingKind, reason: String },

    #[error("invalid dimension {0}: expected an even value >= 2")]
    InvalidDimension(usize),

    #[error("config mismatch: {0}")]
    ConfigMismatch(String),

    #[error("entry {index} = {value} is outside [-1, 1]")]
    Domain { index: usize, value: f64 },

    #[error("code {code} out of range for radix {radix} (pair {pair})")]
    InvalidCode { pair: usize, code: u64, radix: u64 },

    #[error("global code {code} out of range for codebook of size {size}")]
    InvalidGlobalCode { code: u128, size: u128 },

    #[error("codebook size overflows 128 bits")]
    CodebookOverflow,

    #[error("invalid stream: {0}")]
    InvalidStream(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("degenerate region: {0}")]
    DegenerateRegion(String),

    #[error("training diverged at step {step}: loss = {loss}")]
    Divergence { step: usize, loss: f64 },

    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    #[error("ingestion error at row {row}: {reason}")]
    Ingest { row: usize, reason: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}
