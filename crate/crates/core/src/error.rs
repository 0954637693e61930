use thiserror::Error;

/// Errors raised by the library. State and row numbers are 1-based, matching
/// every external format.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("matrix has no states")]
    Empty,
    #[error("negative entry at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize },
    #[error("row {row} sums to {sum}, not 1")]
    RowSumNotOne { row: usize, sum: String },
    #[error("chain is not irreducible")]
    NotIrreducible,
    #[error("matrix is not doubly stochastic: column {col} sums to {sum}")]
    NotDoublyStochastic { col: usize, sum: String },
    #[error("expected {expected} symbols, found {found}")]
    BadLength { expected: usize, found: usize },
    #[error("symbol {symbol:?} is outside 1..={n}")]
    OutOfRangeSymbol { symbol: String, n: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("support would exceed {cap} functions")]
    SupportTooLarge { cap: usize },
    #[error("multichain exploration exceeded {budget} states")]
    StateBudgetExceeded { budget: usize },
    #[error("{what} exceeds cap {cap}")]
    CapExceeded { what: String, cap: usize },
    #[error("exact arithmetic required; float-mode input rejected")]
    FloatModeRejected,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("{ell} does not divide {n}")]
    NotADivisor { n: usize, ell: usize },
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal consistency check failed: {0}")]
    SelfTestFailed(String),
}

impl Error {
    /// Stable variant name, used by the CLI on standard error.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "NotSquare",
            Error::Empty => "Empty",
            Error::NegativeEntry { .. } => "NegativeEntry",
            Error::RowSumNotOne { .. } => "RowSumNotOne",
            Error::NotIrreducible => "NotIrreducible",
            Error::NotDoublyStochastic { .. } => "NotDoublyStochastic",
            Error::BadLength { .. } => "BadLength",
            Error::OutOfRangeSymbol { .. } => "OutOfRangeSymbol",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::SupportTooLarge { .. } => "SupportTooLarge",
            Error::StateBudgetExceeded { .. } => "StateBudgetExceeded",
            Error::CapExceeded { .. } => "CapExceeded",
            Error::FloatModeRejected => "FloatModeRejected",
            Error::PreconditionFailed(_) => "PreconditionFailed",
            Error::NotADivisor { .. } => "NotADivisor",
            Error::InvalidMeasure(_) => "InvalidMeasure",
            Error::InvalidPartition(_) => "InvalidPartition",
            Error::Parse(_) => "Parse",
            Error::SelfTestFailed(_) => "SelfTestFailed",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
