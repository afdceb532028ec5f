//! Crate-wide error type.

use crate::series::YearMonth;

/// Alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// All the ways the library can fail.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A CSV row could not be interpreted.
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    /// A series has a hole in its monthly calendar.
    #[error("series {id}: missing month {month}")]
    Gap { id: String, month: YearMonth },

    /// A value is outside the domain the model is defined on.
    #[error("{0}")]
    Domain(String),

    /// A window is constant, so its dispersion is zero and it cannot be
    /// normalized.
    #[error("degenerate sequence: {0}")]
    DegenerateSequence(String),

    /// Not enough observations to carry out the requested operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Two vectors that must agree in length do not.
    #[error("shape mismatch: expected length {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    /// A parameter fails validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Every kernel value rounded to zero.
    #[error("numeric underflow: {0}")]
    Underflow(String),

    /// One or more ensemble members failed; the ensemble is aborted.
    #[error("ensemble member failures: {}", member_list(.0))]
    Member(Vec<(String, String)>),

    /// Too many members of a homogeneous ensemble failed.
    #[error("ensemble failed: {0}")]
    Ensemble(String),

    /// No grid candidate produced a usable cross-validation score.
    #[error("tuning failed: {0}")]
    Tuning(String),

    /// A ranking table is missing a (model, series) cell.
    #[error("incomplete table: no value for model {model} on series {series}")]
    IncompleteTable { model: String, series: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn member_list(failures: &[(String, String)]) -> String {
    failures
        .iter()
        .map(|(name, err)| format!("{name}: {err}"))
        .collect::<Vec<_>>()
        .join("; ")
}
