use thiserror::Error;

use super::{dotc, DenseMatrix};
use crate::error::{contract_err, dim_err, Result};
use crate::scalar::Scalar;

/// Cholesky breakdown at a 1-based pivot, as LAPACK's `info` would report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("Cholesky breakdown at pivot {pivot}")]
pub struct CholeskyFailure {
    pub pivot: usize,
}

/// Upper-triangular `U` with `UᴴU = R`.
///
/// Only the upper triangle of `R` is read. The outer `Result` carries
/// contract violations (non-square input); the inner one a numerical
/// breakdown, which callers are expected to handle.
pub fn cholesky<T: Scalar>(
    r: &DenseMatrix<T>,
) -> Result<std::result::Result<DenseMatrix<T>, CholeskyFailure>> {
    if r.rows() != r.cols() {
        return dim_err("cholesky", format!("{:?} is not square", r.shape()));
    }
    let n = r.rows();
    let mut u = DenseMatrix::zeros(n, n);
    for j in 0..n {
        // Column j of U above the diagonal: U[0..j, j] = U[0..j,0..j]⁻ᴴ R[0..j, j].
        for i in 0..j {
            let s = dotc(&u.col(i)[..i], &u.col(j)[..i]);
            let v = (r[(i, j)] - s).scale(1.0 / u[(i, i)].re());
            u[(i, j)] = v;
        }
        let s: f64 = u.col(j)[..j].iter().map(|v| v.abs_sqr()).sum();
        let d = r[(j, j)].re() - s;
        if !(d > 0.0) || !d.is_finite() {
            return Ok(Err(CholeskyFailure { pivot: j + 1 }));
        }
        u[(j, j)] = T::from_real(d.sqrt());
    }
    Ok(Ok(u))
}

/// `X·U⁻¹` for upper-triangular `U`, by column-wise forward substitution.
pub fn solve_upper_right<T: Scalar>(
    x: &DenseMatrix<T>,
    u: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let n = u.rows();
    if u.cols() != n || x.cols() != n {
        return dim_err(
            "solve_upper_right",
            format!("X {:?} against U {:?}", x.shape(), u.shape()),
        );
    }
    for j in 0..n {
        if u[(j, j)] == T::zero() {
            return contract_err("solve_upper_right", format!("zero diagonal at {j}"));
        }
    }
    let m = x.rows();
    let mut y = x.clone();
    for j in 0..n {
        let mut acc = y.col(j).to_vec();
        for k in 0..j {
            let w = u[(k, j)];
            if w != T::zero() {
                let yk = y.col(k);
                for i in 0..m {
                    acc[i] -= yk[i] * w;
                }
            }
        }
        let inv = T::one() / u[(j, j)];
        for (dst, a) in y.col_mut(j).iter_mut().zip(acc) {
            *dst = a * inv;
        }
    }
    Ok(y)
}
