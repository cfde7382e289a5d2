use std::fmt;

use thiserror::Error;

/// Why a signal value matrix was rejected. Indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WViolation {
    ZeroEntry { row: usize, col: usize },
    ZeroRow { row: usize },
    ZeroColumn { col: usize },
}

impl fmt::Display for WViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WViolation::ZeroEntry { row, col } => write!(f, "entry ({row},{col}) is zero"),
            WViolation::ZeroRow { row } => write!(f, "row {row} is all-zero"),
            WViolation::ZeroColumn { col } => write!(f, "column {col} is all-zero"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid signal value matrix: {0}")]
    InvalidSignal(WViolation),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("k = {k} exceeds the subset enumeration limit of {limit}")]
    TooManySubsets { k: usize, limit: usize },

    #[error("net for k = {k}, r = {r}, zeta = {zeta} exceeds the cap of {cap} points")]
    NetTooLarge { k: usize, r: f64, zeta: f64, cap: usize },

    #[error("decoder needs {needed} tests, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("decode failed: {0}")]
    Decode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
