//! Spectral estimates (Lanczos) and scalar Chebyshev quantities.

use crate::dense::{dotc, hermitian_eigvals, norm2, DenseMatrix};
use crate::error::{contract_err, Result};
use crate::operator::HermitianOperator;
use crate::scalar::Scalar;

/// Estimates of `λ₁`, `λ_ℓ` and a bound on `λ_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralBounds {
    pub lower_est: f64,
    pub inner_edge: f64,
    pub upper_bound: f64,
}

/// Interval `[α, β]` as center and half-width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterInterval {
    pub center: f64,
    pub half_width: f64,
}

impl FilterInterval {
    pub fn from_edges(alpha: f64, beta: f64) -> Result<Self> {
        let half_width = (beta - alpha) / 2.0;
        if !(half_width > 0.0) || !half_width.is_finite() || !alpha.is_finite() {
            return contract_err(
                "FilterInterval",
                format!("degenerate interval [{alpha}, {beta}]"),
            );
        }
        Ok(Self {
            center: (alpha + beta) / 2.0,
            half_width,
        })
    }

    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }

    /// Maps `λ` to `t = (λ − c)/e`.
    pub fn to_unit(&self, lambda: f64) -> f64 {
        (lambda - self.center) / self.half_width
    }

    pub fn contains(&self, lambda: f64) -> bool {
        self.to_unit(lambda).abs() <= 1.0
    }
}

/// `C_m(t)` by the three-term recurrence.
pub fn cheb_scalar(m: usize, t: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let (mut prev, mut curr) = (1.0, t);
    for _ in 1..m {
        let next = 2.0 * t * curr - prev;
        prev = curr;
        curr = next;
    }
    curr
}

/// `|t| + √(t² − 1)` for `|t| > 1`, with `t² − 1` factored to keep
/// accuracy near the interval edge.
fn rho_from_t(t: f64) -> f64 {
    let a = t.abs();
    a + ((a - 1.0) * (a + 1.0)).sqrt()
}

fn outside(op: &'static str, lambda: f64, interval: &FilterInterval) -> Result<f64> {
    let t = interval.to_unit(lambda);
    if !(t.abs() > 1.0) {
        return contract_err(
            op,
            format!(
                "λ = {lambda} lies inside [{}, {}]",
                interval.lower(),
                interval.upper()
            ),
        );
    }
    Ok(t)
}

/// `|ρ_λ| = max_± |t ± √(t² − 1)|`, always above 1.
pub fn rho_of(lambda: f64, interval: &FilterInterval) -> Result<f64> {
    let t = outside("rho_of", lambda, interval)?;
    Ok(rho_from_t(t))
}

/// `τ(λ) = 1/|ρ_λ|`, the smaller branch, in (0, 1).
pub fn convergence_ratio(lambda: f64, interval: &FilterInterval) -> Result<f64> {
    let t = outside("convergence_ratio", lambda, interval)?;
    Ok(1.0 / rho_from_t(t))
}

const MAX_RESTARTS: usize = 3;

/// Lanczos with full reorthogonalization from a seeded normal start.
///
/// `upper_bound` is the largest Ritz value plus the norm of the final
/// residual vector. `inner_edge` interpolates the Ritz range at the
/// fraction `ell/n`, capped by the Ritz value at that quantile.
///
/// A breakdown restarts from a fresh vector orthogonal to the basis built
/// so far. Once the restarts are spent (as for a multiple of the
/// identity) the run ends early with the steps already taken.
pub fn lanczos_bounds<T: Scalar, A: HermitianOperator<T> + ?Sized>(
    a: &A,
    ell: usize,
    steps: usize,
    seed: u64,
) -> Result<SpectralBounds> {
    let n = a.dim();
    if steps < 4 {
        return contract_err("lanczos_bounds", format!("steps = {steps} < 4"));
    }
    if ell >= n {
        return contract_err("lanczos_bounds", format!("ell = {ell} ≥ n = {n}"));
    }
    let k_max = steps.min(n);
    let mut rng = crate::seeded_rng(seed, 0x6c61_6e63);
    let mut basis: Vec<Vec<T>> = Vec::with_capacity(k_max);
    let mut alphas: Vec<f64> = Vec::with_capacity(k_max);
    let mut betas: Vec<f64> = Vec::with_capacity(k_max);
    let mut restarts = 0;

    let fresh = |basis: &[Vec<T>], rng: &mut rand_chacha::ChaCha8Rng| -> Option<Vec<T>> {
        let mut v: Vec<T> = (0..n).map(|_| T::sample_normal(rng)).collect();
        reorthogonalize(basis, &mut v);
        let nv = norm2(&v);
        (nv > 0.0).then(|| v.iter().map(|x| x.scale(1.0 / nv)).collect())
    };
    let mut v = fresh(&basis, &mut rng).expect("a nonzero start vector");
    let mut last_residual = 0.0;

    while basis.len() < k_max {
        let x = DenseMatrix::from_col_major(n, 1, v.clone())?;
        let mut w = a.apply(&x)?.into_vec();
        let alpha = dotc(&v, &w).re();
        for (wi, &vi) in w.iter_mut().zip(&v) {
            *wi -= vi.scale(alpha);
        }
        if let (Some(prev), Some(&b)) = (basis.last(), betas.last()) {
            for (wi, &pi) in w.iter_mut().zip(prev.iter()) {
                *wi -= pi.scale(b);
            }
        }
        basis.push(v);
        alphas.push(alpha);
        reorthogonalize(&basis, &mut w);
        let beta = norm2(&w);
        last_residual = beta;
        if basis.len() == k_max {
            break;
        }
        let scale = alphas
            .iter()
            .chain(betas.iter())
            .fold(0.0_f64, |m, x| m.max(x.abs()));
        if beta <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
            if restarts == MAX_RESTARTS {
                break;
            }
            restarts += 1;
            match fresh(&basis, &mut rng) {
                Some(nv) => {
                    betas.push(0.0);
                    v = nv;
                    continue;
                }
                None => break,
            }
        }
        betas.push(beta);
        v = w.iter().map(|x| x.scale(1.0 / beta)).collect();
    }

    let k = alphas.len();
    let t = DenseMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let theta = hermitian_eigvals(&t)?;
    let lo = theta[0];
    let hi = theta[k - 1];
    let frac = ell as f64 / n as f64;
    let q = ((frac * k as f64).ceil() as usize).clamp(2.min(k), k);
    let inner_edge = (lo + frac * (hi - lo)).min(theta[q - 1]);
    Ok(SpectralBounds {
        lower_est: lo,
        inner_edge,
        upper_bound: hi + last_residual,
    })
}

/// Two passes of classical Gram–Schmidt against `basis`.
fn reorthogonalize<T: Scalar>(basis: &[Vec<T>], w: &mut [T]) {
    for _ in 0..2 {
        for b in basis {
            let h = dotc(b, w);
            for (wi, &bi) in w.iter_mut().zip(b) {
                *wi -= bi * h;
            }
        }
    }
}
