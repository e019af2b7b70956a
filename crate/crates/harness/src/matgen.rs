//! Dense Hermitian test matrices with a prescribed spectrum.

use chase_core::dense::{householder_qr, matmul, symmetrize, DenseMatrix, DEFAULT_DENSE_CAP};
use chase_core::{seeded_rng, Scalar, ScalarKind};
use serde::Serialize;

use crate::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Spectrum {
    /// `n` evenly spaced values from `lo` to `hi` inclusive.
    Uniform { lo: f64, hi: f64 },
    /// A fraction `cluster_frac` of the values packed in groups of four
    /// inside the lowest tenth of `[lo, hi]`, the rest evenly spread above.
    ClusteredDft { lo: f64, hi: f64, cluster_frac: f64 },
    Explicit { values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    #[default]
    Random,
    /// `A` is the diagonal matrix itself.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixSpec {
    pub n: usize,
    pub spectrum: Spectrum,
    #[serde(serialize_with = "kind_name")]
    pub kind: ScalarKind,
    pub basis: Basis,
    pub seed: u64,
}

fn kind_name<S: serde::Serializer>(k: &ScalarKind, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(k.name())
}

const GROUP: usize = 4;

impl Spectrum {
    /// The ascending spectrum of length `n`.
    pub fn values(&self, n: usize) -> Result<Vec<f64>> {
        let bad = |m: String| Err(HarnessError::Contract(m));
        let mut v = match self {
            Spectrum::Uniform { lo, hi } => {
                if !(lo <= hi) {
                    return bad(format!("uniform spectrum needs lo ≤ hi, got {lo}, {hi}"));
                }
                if n == 1 {
                    vec![*lo]
                } else {
                    let h = (hi - lo) / (n - 1) as f64;
                    (0..n).map(|i| lo + h * i as f64).collect()
                }
            }
            Spectrum::ClusteredDft {
                lo,
                hi,
                cluster_frac,
            } => {
                if !(lo < hi) || !(0.0..=1.0).contains(cluster_frac) {
                    return bad(format!(
                        "clustered spectrum needs lo < hi and 0 ≤ frac ≤ 1, got {lo}, {hi}, {cluster_frac}"
                    ));
                }
                let w = hi - lo;
                let m = ((cluster_frac * n as f64).round() as usize).min(n);
                let groups = m.div_ceil(GROUP).max(1);
                let zone = 0.1 * w;
                let delta = zone / (groups * 16) as f64;
                let mut v: Vec<f64> = (0..m)
                    .map(|i| lo + zone * (i / GROUP) as f64 / groups as f64 + delta * (i % GROUP) as f64)
                    .collect();
                let rest = n - m;
                v.extend((0..rest).map(|j| lo + zone + (w - zone) * (j + 1) as f64 / rest as f64));
                v
            }
            Spectrum::Explicit { values } => {
                if values.len() != n {
                    return bad(format!("explicit spectrum has {} values for n = {n}", values.len()));
                }
                values.clone()
            }
        };
        if v.iter().any(|x| !x.is_finite()) {
            return bad("spectrum contains non-finite values".into());
        }
        v.sort_by(f64::total_cmp);
        Ok(v)
    }
}

/// `A = X·diag(λ)·Xᴴ` with `X` the unitary factor of a seeded Gaussian
/// block. Returns `A` and the ascending spectrum.
pub fn gen_matrix<T: Scalar>(spec: &MatrixSpec) -> Result<(DenseMatrix<T>, Vec<f64>)> {
    let n = spec.n;
    if n == 0 || n > DEFAULT_DENSE_CAP {
        return Err(HarnessError::Contract(format!(
            "n = {n} outside 1..={DEFAULT_DENSE_CAP}"
        )));
    }
    if T::KIND != spec.kind {
        return Err(HarnessError::Contract(format!(
            "spec asks for {} but {} was requested",
            spec.kind,
            T::KIND
        )));
    }
    let lambda = spec.spectrum.values(n)?;
    let diag: Vec<T> = lambda.iter().map(|&l| T::from_real(l)).collect();
    if spec.basis == Basis::Identity {
        return Ok((DenseMatrix::from_diag(&diag), lambda));
    }
    let mut rng = seeded_rng(spec.seed, 0x6d61_7467);
    let g = DenseMatrix::<T>::random_normal(n, n, &mut rng);
    let x = householder_qr(&g)?.q;
    let mut xd = x.clone();
    for (j, &l) in lambda.iter().enumerate() {
        for v in xd.col_mut(j) {
            *v = v.scale(l);
        }
    }
    let mut a = matmul(&xd, &x.adjoint())?;
    symmetrize(&mut a);
    Ok((a, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use chase_core::dense::hermitian_eigvals;
    use num_complex::Complex64;

    fn spec(n: usize, spectrum: Spectrum, kind: ScalarKind) -> MatrixSpec {
        MatrixSpec {
            n,
            spectrum,
            kind,
            basis: Basis::Random,
            seed: 9,
        }
    }

    #[test]
    fn explicit_three() {
        let s = spec(
            3,
            Spectrum::Explicit {
                values: vec![3.0, 1.0, 2.0],
            },
            ScalarKind::Real64,
        );
        let (a, l) = gen_matrix::<f64>(&s).unwrap();
        assert_eq!(l, vec![1.0, 2.0, 3.0]);
        let ev = hermitian_eigvals(&a).unwrap();
        for (x, y) in ev.iter().zip(&l) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn explicit_length_mismatch() {
        let s = spec(
            4,
            Spectrum::Explicit {
                values: vec![1.0, 2.0],
            },
            ScalarKind::Real64,
        );
        assert!(gen_matrix::<f64>(&s).is_err());
    }

    #[test]
    fn kind_mismatch_rejected() {
        let s = spec(4, Spectrum::Uniform { lo: 0.0, hi: 1.0 }, ScalarKind::Complex128);
        assert!(gen_matrix::<f64>(&s).is_err());
    }

    #[test]
    fn clustered_decile_count() {
        let v = Spectrum::ClusteredDft {
            lo: -10.0,
            hi: 90.0,
            cluster_frac: 0.1,
        }
        .values(1000)
        .unwrap();
        assert_eq!(v.iter().filter(|&&x| x < 0.0).count(), 100);
        assert_eq!(v[0], -10.0);
        assert!((v[999] - 90.0).abs() < 1e-12);
        assert!(v.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn complex_spectrum_matches_oracle() {
        let s = spec(
            80,
            Spectrum::ClusteredDft {
                lo: -1.0,
                hi: 4.0,
                cluster_frac: 0.2,
            },
            ScalarKind::Complex128,
        );
        let (a, l) = gen_matrix::<Complex64>(&s).unwrap();
        assert_eq!(a.hermitian_defect(), 0.0);
        let ev = hermitian_eigvals(&a).unwrap();
        let scale = l.iter().fold(0f64, |m, x| m.max(x.abs()));
        for (x, y) in ev.iter().zip(&l) {
            assert!((x - y).abs() < 1e-10 * scale, "{x} vs {y}");
        }
    }

    #[test]
    fn same_seed_same_bits() {
        let s = spec(40, Spectrum::Uniform { lo: 1.0, hi: 2.0 }, ScalarKind::Real64);
        assert_eq!(gen_matrix::<f64>(&s).unwrap().0, gen_matrix::<f64>(&s).unwrap().0);
        let mut t = s.clone();
        t.seed += 1;
        assert_ne!(gen_matrix::<f64>(&s).unwrap().0, gen_matrix::<f64>(&t).unwrap().0);
    }

    #[test]
    fn identity_basis_is_diagonal() {
        let mut s = spec(5, Spectrum::Uniform { lo: 1.0, hi: 5.0 }, ScalarKind::Real64);
        s.basis = Basis::Identity;
        let (a, _) = gen_matrix::<f64>(&s).unwrap();
        assert_eq!(a, DenseMatrix::from_diag(&[1.0, 2.0, 3.0, 4.0, 5.0]));
    }
}
