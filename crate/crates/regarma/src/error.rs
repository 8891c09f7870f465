//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by dataset handling, fitting, selection and diagnostics.
#[derive(Debug, Error)]
pub enum RegarmaError {
    /// A column (or the response) has zero variance and cannot be standardized.
    #[error("column '{0}' is constant (zero variance)")]
    ConstantColumn(String),

    /// The input contains NaN or infinite entries.
    #[error("non-finite value in '{column}' at row {row}")]
    NonFinite { column: String, row: usize },

    /// Requested lag orders leave no effective sample.
    #[error("orders p + q = {order} must be smaller than the series length T = {t_len}")]
    OrderTooLarge { order: usize, t_len: usize },

    /// Vector or matrix sizes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Penalty weights do not match the fitted coefficient shape.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// Prediction requested with fewer lagged values than the model order.
    #[error("insufficient history: need {needed} lags of {what}, got {got}")]
    InsufficientHistory {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    /// Not enough effective observations for the requested fold count.
    #[error("too few samples: n = {n} cannot support K = {k} folds")]
    TooFewSamples { n: usize, k: usize },

    /// Shuffled folds are not supported for serially dependent data.
    #[error("shuffled folds are not supported; folds must be contiguous blocks")]
    ShuffledFolds,

    /// Two vectors that must agree in length do not.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Series too short for the requested number of lags.
    #[error("series of length {len} is too short for max_lag = {max_lag}")]
    TooShort { len: usize, max_lag: usize },

    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// CSV ingestion failure.
    #[error("csv error: {0}")]
    Csv(String),

    /// Filesystem failure while reading or writing artifacts.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, RegarmaError>;
