use num_complex::Complex64;
use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// The refined quadrature (doubled window and node count) disagreed with
    /// the base estimate.
    #[error(
        "quadrature not converged: base {base}, refined {refined}, relative change {rel_change:.3e} exceeds {tolerance:.1e}"
    )]
    Accuracy {
        base: Complex64,
        refined: Complex64,
        rel_change: f64,
        tolerance: f64,
    },

    #[error("number-basis truncation tail {tail:.3e} exceeds {bound:.1e}")]
    Truncation { tail: f64, bound: f64 },

    #[error("numeric consistency: {0}")]
    NumericConsistency(String),

    #[error("lookup failed: {0}")]
    Lookup(String),

    /// `position` is a 1-based character column.
    #[error("syntax error at column {position}: {message}")]
    Syntax { position: usize, message: String },

    #[error("limit exceeded: {0}")]
    Limit(String),

    #[error("degenerate mode {mode}: spectral coefficient {coefficient} is not positive")]
    DegenerateMode { mode: String, coefficient: f64 },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
