//! Chebyshev-filtered subspace iteration for the lowest eigenpairs of a
//! Hermitian matrix, with a cheap upper bound on the condition number of
//! each filtered block used to pick the cheapest safe CholeskyQR variant.

pub mod cond;
pub mod dense;
pub mod error;
pub mod filter;
pub mod operator;
pub mod qr;
pub mod scalar;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::{Scalar, ScalarKind, UNIT_ROUNDOFF};

/// Deterministic generator for a `(seed, stream)` pair; distinct streams
/// give independent sequences from the same user seed.
pub fn seeded_rng(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
