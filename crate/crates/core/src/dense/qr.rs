use super::{dotc, norm2, DenseMatrix};
use crate::error::{dim_err, Result};
use crate::scalar::Scalar;

/// Thin QR factors: `Q` is rows×cols with orthonormal columns, `R` is
/// cols×cols upper triangular with a nonnegative real diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct QrFactors<T> {
    pub q: DenseMatrix<T>,
    pub r: DenseMatrix<T>,
}

/// Elementary reflector `H = I − τ·v·vᴴ` with `v[0] = 1` and `Hᴴx = β·e₁`,
/// `β` real. Overwrites `x[1..]` with `v[1..]` and returns `(τ, β)`.
fn make_reflector<T: Scalar>(x: &mut [T]) -> (T, f64) {
    let alpha = x[0];
    let xnorm = norm2(&x[1..]);
    if xnorm == 0.0 && alpha.im() == 0.0 {
        return (T::zero(), alpha.re());
    }
    let mag = alpha.abs().hypot(xnorm);
    let beta = if alpha.re() >= 0.0 { -mag } else { mag };
    // τ = (β − α)/β, split into parts to keep the imaginary part exact.
    let tau = T::from_parts((beta - alpha.re()) / beta, -alpha.im() / beta)
        .expect("real scalars have zero imaginary part here");
    let inv = T::one() / (alpha - T::from_real(beta));
    for v in &mut x[1..] {
        *v = *v * inv;
    }
    (tau, beta)
}

/// Applies `I − τ·v·vᴴ` (with `v[0] = 1` implicit) to a column.
fn apply_reflector<T: Scalar>(tau: T, v_tail: &[T], col: &mut [T]) {
    let s = col[0] + dotc(v_tail, &col[1..]);
    let f = tau * s;
    col[0] -= f;
    for (c, &v) in col[1..].iter_mut().zip(v_tail) {
        *c -= f * v;
    }
}

/// Householder QR with the diagonal of `R` made nonnegative.
pub fn householder_qr<T: Scalar>(x: &DenseMatrix<T>) -> Result<QrFactors<T>> {
    let (m, n) = x.shape();
    if m < n {
        return dim_err("householder_qr", format!("{m} rows < {n} columns"));
    }
    let mut a = x.clone();
    let mut taus = Vec::with_capacity(n);
    let mut betas = Vec::with_capacity(n);
    for k in 0..n {
        let (tau, beta) = make_reflector(&mut a.col_mut(k)[k..]);
        taus.push(tau);
        betas.push(beta);
        if tau != T::zero() {
            let v_tail = a.col(k)[k + 1..].to_vec();
            let tc = tau.conj();
            for j in k + 1..n {
                apply_reflector(tc, &v_tail, &mut a.col_mut(j)[k..]);
            }
        }
    }

    let mut r = DenseMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            r[(i, j)] = a[(i, j)];
        }
        r[(j, j)] = T::from_real(betas[j]);
    }

    let mut q = DenseMatrix::eye(m, n);
    for k in (0..n).rev() {
        let tau = taus[k];
        if tau == T::zero() {
            continue;
        }
        let v_tail = &a.col(k)[k + 1..];
        for j in k..n {
            apply_reflector(tau, v_tail, &mut q.col_mut(j)[k..]);
        }
    }

    for k in 0..n {
        if betas[k] < 0.0 {
            for j in k..n {
                r[(k, j)] = -r[(k, j)];
            }
            for v in q.col_mut(k) {
                *v = -*v;
            }
        }
    }
    Ok(QrFactors { q, r })
}
