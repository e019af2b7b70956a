//! Synthetic problems, Matrix Market I/O, trace reporting and the two
//! experiments (condition trace and QR comparison) behind the `chase` CLI.

pub mod experiments;
pub mod matgen;
pub mod mm;
pub mod trace;

pub use mm::AnyMatrix;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] chase_core::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Contract(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
