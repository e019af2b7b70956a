//! Dense Hermitian eigensolver: Householder reduction to tridiagonal form,
//! a diagonal phase scaling that makes the tridiagonal real, then implicit
//! QL with Wilkinson-style shifts (the EISPACK `tql2` scheme).

use super::{dotc, norm2, DenseMatrix};
use crate::error::{contract_err, dim_err, Result};
use crate::scalar::Scalar;

/// Largest order accepted by [`hermitian_eig`].
pub const DEFAULT_DENSE_CAP: usize = 8192;

const QL_MAX_SWEEPS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct EigDecomposition<T> {
    /// Ascending.
    pub values: Vec<f64>,
    pub vectors: DenseMatrix<T>,
}

struct Tridiagonal<T> {
    diag: Vec<f64>,
    /// Moduli of the (complex) subdiagonal, length n (last entry unused).
    off: Vec<f64>,
    /// Phases δ with `Dᴴ·T·D` real, `D = diag(δ)`.
    phases: Vec<T>,
    /// Reflector vectors `u_i` acting on rows `i+1..`, with `2/‖u_i‖²`.
    reflectors: Vec<(Vec<T>, f64)>,
}

fn check_input<T: Scalar>(h: &DenseMatrix<T>) -> Result<()> {
    if h.rows() != h.cols() {
        return dim_err("hermitian_eig", format!("{:?} is not square", h.shape()));
    }
    if h.rows() > DEFAULT_DENSE_CAP {
        return contract_err(
            "hermitian_eig",
            format!("order {} exceeds the dense cap {DEFAULT_DENSE_CAP}", h.rows()),
        );
    }
    if !h.is_finite() {
        return contract_err("hermitian_eig", "non-finite entries");
    }
    let defect = h.hermitian_defect();
    if defect > 1e-12 * h.frobenius_norm() {
        return contract_err(
            "hermitian_eig",
            format!("input is not Hermitian (defect {defect:e})"),
        );
    }
    Ok(())
}

fn tridiagonalize<T: Scalar>(h: &DenseMatrix<T>, keep_reflectors: bool) -> Tridiagonal<T> {
    let n = h.rows();
    let mut a = h.clone();
    let mut diag = vec![0.0; n];
    let mut sub = vec![T::zero(); n];
    let mut reflectors = Vec::new();

    for i in 0..n.saturating_sub(1) {
        let x = a.col(i)[i + 1..].to_vec();
        let tail = norm2(&x[1..]);
        if tail == 0.0 {
            sub[i] = x[0];
            if keep_reflectors {
                reflectors.push((Vec::new(), 0.0));
            }
            continue;
        }
        let alpha = x[0];
        let xnorm = alpha.abs().hypot(tail);
        let phase = if alpha.abs() == 0.0 {
            T::one()
        } else {
            alpha.scale(1.0 / alpha.abs())
        };
        // H = I − h·u·uᴴ maps x to β·e₁ with β = −phase·‖x‖.
        let mut u = x;
        u[0] = alpha + phase.scale(xnorm);
        let unorm2: f64 = u.iter().map(|v| v.abs_sqr()).sum();
        let hfac = 2.0 / unorm2;
        sub[i] = -phase.scale(xnorm);

        // Trailing update B ← H·B·H with p = h·B·u, q = p − (h/2)(uᴴp)·u.
        let m = n - i - 1;
        let off = i + 1;
        let mut p = vec![T::zero(); m];
        for (c, &uc) in u.iter().enumerate() {
            let col = &a.col(off + c)[off..];
            let w = uc.scale(hfac);
            for r in 0..m {
                p[r] += col[r] * w;
            }
        }
        let k = dotc(&u, &p).scale(0.5 * hfac);
        let q: Vec<T> = p.iter().zip(&u).map(|(&pv, &uv)| pv - k * uv).collect();
        for c in 0..m {
            let (uc, qc) = (u[c].conj(), q[c].conj());
            let col = &mut a.col_mut(off + c)[off..];
            for r in 0..m {
                col[r] -= u[r] * qc + q[r] * uc;
            }
        }
        if keep_reflectors {
            reflectors.push((u, hfac));
        }
    }
    for (i, d) in diag.iter_mut().enumerate() {
        *d = a[(i, i)].re();
    }

    let mut phases = vec![T::one(); n];
    let mut off = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let mag = sub[i].abs();
        off[i] = mag;
        phases[i + 1] = if mag == 0.0 {
            phases[i]
        } else {
            phases[i] * sub[i].scale(1.0 / mag)
        };
    }
    Tridiagonal {
        diag,
        off,
        phases,
        reflectors,
    }
}

/// Implicit QL on a real symmetric tridiagonal. `e[i]` couples `i` and `i+1`.
/// When `z` is given, rotations are accumulated into its columns.
fn tql2(d: &mut [f64], e: &mut [f64], mut z: Option<&mut DenseMatrix<f64>>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;

    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > QL_MAX_SWEEPS {
                    return contract_err("hermitian_eig", "QL iteration did not converge");
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_deref_mut() {
                        let (zi, zi1) = z.col_pair_mut(i, i + 1);
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let hk = *b;
                            *b = s * *a + c * hk;
                            *a = c * *a - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

fn ascending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

/// Full eigendecomposition of a Hermitian matrix, values ascending.
pub fn hermitian_eig<T: Scalar>(h: &DenseMatrix<T>) -> Result<EigDecomposition<T>> {
    check_input(h)?;
    let n = h.rows();
    let tri = tridiagonalize(h, true);
    let mut d = tri.diag;
    let mut e = tri.off;
    let mut z = DenseMatrix::<f64>::identity(n);
    tql2(&mut d, &mut e, Some(&mut z))?;

    let order = ascending_order(&d);
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    // Vectors = H_0·H_1·…·D·Z, applied right to left.
    let mut v = DenseMatrix::from_fn(n, n, |i, j| tri.phases[i].scale(z[(i, order[j])]));
    for (i, (u, hfac)) in tri.reflectors.iter().enumerate().rev() {
        if u.is_empty() {
            continue;
        }
        for j in 0..n {
            let col = &mut v.col_mut(j)[i + 1..];
            let s = dotc(u, col).scale(*hfac);
            for (c, &uv) in col.iter_mut().zip(u) {
                *c -= uv * s;
            }
        }
    }
    Ok(EigDecomposition { values, vectors: v })
}

/// Eigenvalues only, ascending.
pub fn hermitian_eigvals<T: Scalar>(h: &DenseMatrix<T>) -> Result<Vec<f64>> {
    check_input(h)?;
    let tri = tridiagonalize(h, false);
    let mut d = tri.diag;
    let mut e = tri.off;
    tql2(&mut d, &mut e, None)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}
