use thiserror::Error;

/// Errors raised by the matrix kernels and the sparsification pipelines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: expected {expected}, found {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },

    /// A precondition on an argument was violated.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An entry of `X X^T` exceeds the declared radius.
    #[error("radius violation: |(XX^T)[{i}, {j}]| = {value:e} exceeds r = {radius:e}")]
    RadiusViolation {
        i: usize,
        j: usize,
        value: f64,
        radius: f64,
    },

    /// Internal postcondition failed; indicates a numerical breakdown.
    #[error("internal invariant failure: {0}")]
    Invariant(String),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn dims(op: &'static str, expected: impl ToString, found: impl ToString) -> Self {
        Error::DimensionMismatch {
            op,
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
