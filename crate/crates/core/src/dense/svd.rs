//! Extreme singular values by one-sided (Hestenes) Jacobi.
//!
//! A Householder QR first shrinks the tall input to its square `R` factor,
//! which has the same singular values; Jacobi then orthogonalizes the
//! columns of `R` and reads singular values off the column norms.

use super::{dotc, householder_qr, norm2, DenseMatrix};
use crate::error::{dim_err, Result};
use crate::scalar::Scalar;

const MAX_SWEEPS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdCond {
    pub sigma_max: f64,
    pub sigma_min: f64,
    /// `sigma_max / sigma_min`, `+inf` when `sigma_min` is zero.
    pub cond2: f64,
}

/// All singular values of `X` (rows ≥ cols), descending.
pub fn jacobi_singular_values<T: Scalar>(x: &DenseMatrix<T>) -> Result<Vec<f64>> {
    let (m, n) = x.shape();
    if m < n || n == 0 {
        return dim_err("jacobi_svd_cond", format!("needs rows ≥ cols ≥ 1, got {m}x{n}"));
    }
    let mut r = householder_qr(x)?.r;
    let tol = f64::EPSILON * (n as f64).sqrt();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (cp, cq) = r.col_pair_mut(p, q);
                let alpha: f64 = cp.iter().map(|v| v.abs_sqr()).sum();
                let beta: f64 = cq.iter().map(|v| v.abs_sqr()).sum();
                let gamma = dotc(cp, cq);
                let g = gamma.abs();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Phase-align column q so the coupling becomes real and positive.
                let phase = gamma.conj().scale(1.0 / g);
                for v in cq.iter_mut() {
                    *v = *v * phase;
                }
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + zeta.hypot(1.0));
                let c = 1.0 / t.hypot(1.0);
                let s = c * t;
                for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
                    let (va, vb) = (*a, *b);
                    *a = va.scale(c) - vb.scale(s);
                    *b = va.scale(s) + vb.scale(c);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<f64> = (0..n).map(|j| norm2(r.col(j))).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Extreme singular values and the 2-norm condition number of `X`.
pub fn jacobi_svd_cond<T: Scalar>(x: &DenseMatrix<T>) -> Result<SvdCond> {
    let sv = jacobi_singular_values(x)?;
    let sigma_max = sv[0];
    let sigma_min = *sv.last().expect("at least one column");
    let cond2 = if sigma_min == 0.0 {
        f64::INFINITY
    } else {
        sigma_max / sigma_min
    };
    Ok(SvdCond {
        sigma_max,
        sigma_min,
        cond2,
    })
}
