use thiserror::Error;

/// Errors raised when an operation's preconditions do not hold.
///
/// Numerical breakdowns that callers are expected to handle (a Cholesky
/// pivot going non-positive, for instance) are reported through dedicated
/// failure values instead.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{op}: dimension mismatch ({detail})")]
    DimensionMismatch { op: &'static str, detail: String },
    #[error("{op}: {detail}")]
    ContractViolation { op: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn dim_err<T>(op: &'static str, detail: impl Into<String>) -> Result<T> {
    Err(Error::DimensionMismatch {
        op,
        detail: detail.into(),
    })
}

pub(crate) fn contract_err<T>(op: &'static str, detail: impl Into<String>) -> Result<T> {
    Err(Error::ContractViolation {
        op,
        detail: detail.into(),
    })
}
