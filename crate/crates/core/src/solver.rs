//! Chebyshev-filtered subspace iteration with locking.

use std::time::Instant;

use crate::cond::{estimate_locked, CondEstimate, EtaMode};
use crate::dense::{adjoint_mul, hermitian_eig, matmul, norm2, symmetrize, DenseMatrix};
use crate::error::{contract_err, dim_err, Result};
use crate::filter::{choose_degrees, filter_block, DegreeSchedule};
use crate::operator::HermitianOperator;
use crate::qr::{run_variant, select_variant, QrChoice, QrConfig, QrVariant};
use crate::scalar::Scalar;
use crate::spectral::{lanczos_bounds, FilterInterval, SpectralBounds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QrMode {
    #[default]
    Dynamic,
    HouseholderOnly,
    /// Always the given variant (still falling back on breakdown).
    Forced(QrVariant),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EtaChoice {
    #[default]
    One,
    Formula,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub nev: usize,
    pub nex: usize,
    pub tol: f64,
    /// Scale `tol` by an estimate of `‖A‖₂`.
    pub relative_tol: bool,
    pub base_degree: usize,
    pub max_degree: usize,
    pub degree_opt: bool,
    pub eta: EtaChoice,
    pub qr_mode: QrMode,
    pub qr_config: QrConfig,
    pub max_iterations: usize,
    pub seed: u64,
    pub lanczos_steps: usize,
    /// Replaces the Lanczos estimates when set.
    pub spectral_override: Option<SpectralBounds>,
}

impl SolverConfig {
    pub fn new(nev: usize, nex: usize) -> Self {
        Self {
            nev,
            nex,
            tol: 1e-10,
            relative_tol: false,
            base_degree: 20,
            max_degree: 36,
            degree_opt: true,
            eta: EtaChoice::One,
            qr_mode: QrMode::Dynamic,
            qr_config: QrConfig::default(),
            max_iterations: 50,
            seed: 0,
            lanczos_steps: 25,
            spectral_override: None,
        }
    }

    pub fn ell(&self) -> usize {
        self.nev + self.nex
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |d: String| contract_err("SolverConfig", d);
        if self.nev == 0 || self.nex == 0 {
            return bad(format!("nev = {}, nex = {}; both must be ≥ 1", self.nev, self.nex));
        }
        if self.ell() >= n {
            return bad(format!("nev + nex = {} must be below n = {n}", self.ell()));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol = {}", self.tol));
        }
        if self.base_degree == 0 || self.base_degree > self.max_degree {
            return bad(format!(
                "base degree {} must lie in 1..={}",
                self.base_degree, self.max_degree
            ));
        }
        if self.lanczos_steps < 4 {
            return bad(format!("lanczos_steps = {}", self.lanczos_steps));
        }
        Ok(())
    }
}

/// Search block with its locked prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace<T> {
    pub block: DenseMatrix<T>,
    pub locked: usize,
    /// One per column, ascending within the locked prefix and within the
    /// active part.
    pub ritz_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub iter: usize,
    /// Locked columns entering this iteration's QR.
    pub locked: usize,
    pub deg_min: usize,
    pub deg_max: usize,
    pub cond_est: f64,
    pub cond_exact: Option<f64>,
    pub qr: QrChoice,
    pub res_max: Option<f64>,
    pub res_min: Option<f64>,
    pub matvecs_cumulative: usize,
    /// Absent for the initial QR, which has no filter.
    pub estimate: Option<CondEstimate>,
    /// `‖QᴴQ − I‖_F` after the QR step.
    pub orthogonality: f64,
    pub qr_seconds: f64,
    pub degree_warnings: usize,
    pub newly_locked: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult<T> {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DenseMatrix<T>,
    pub iterations: usize,
    pub matvecs: usize,
    pub traces: Vec<IterationTrace>,
    pub converged: bool,
    /// Residuals of the returned pairs, recomputed after the loop.
    pub final_residuals: Vec<f64>,
    pub spectral: SpectralBounds,
    /// Absolute residual threshold that was applied.
    pub tol_used: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RitzOutput<T> {
    /// The input block with its active columns rotated to Ritz vectors.
    pub rotated: DenseMatrix<T>,
    /// Ascending Ritz values of the active columns.
    pub ritz_values: Vec<f64>,
}

/// Rayleigh–Ritz on the active columns `locked..` of an orthonormal block.
pub fn rayleigh_ritz<T: Scalar, A: HermitianOperator<T> + ?Sized>(
    a: &A,
    q: &DenseMatrix<T>,
    locked: usize,
) -> Result<RitzOutput<T>> {
    if locked >= q.cols() {
        return contract_err(
            "rayleigh_ritz",
            format!("{locked} locked of {} columns leaves nothing active", q.cols()),
        );
    }
    let qa = q.columns(locked..q.cols());
    let aq = a.apply(&qa)?;
    let mut h = adjoint_mul(&qa, &aq)?;
    symmetrize(&mut h);
    let eig = hermitian_eig(&h)?;
    let va = matmul(&qa, &eig.vectors)?;
    let mut rotated = q.clone();
    rotated.set_columns(locked, &va)?;
    Ok(RitzOutput {
        rotated,
        ritz_values: eig.values,
    })
}

/// `‖A·v_i − θ_i·v_i‖₂/‖v_i‖₂` per column; a zero column gives `+inf`.
pub fn residuals<T: Scalar, A: HermitianOperator<T> + ?Sized>(
    a: &A,
    v: &DenseMatrix<T>,
    ritz_values: &[f64],
) -> Result<Vec<f64>> {
    if v.cols() != ritz_values.len() {
        return dim_err(
            "residuals",
            format!("{} columns, {} Ritz values", v.cols(), ritz_values.len()),
        );
    }
    let av = a.apply(v)?;
    Ok((0..v.cols())
        .map(|j| {
            let nv = norm2(v.col(j));
            if nv == 0.0 {
                return f64::INFINITY;
            }
            let th = ritz_values[j];
            let r: Vec<T> = av
                .col(j)
                .iter()
                .zip(v.col(j))
                .map(|(&x, &y)| x - y.scale(th))
                .collect();
            norm2(&r) / nv
        })
        .collect())
}

/// Locks the leading run of active columns with residual below `tol`,
/// never past column `limit` (the number of wanted pairs).
pub fn lock_and_deflate<T: Scalar>(
    sub: Subspace<T>,
    residual_norms: &[f64],
    tol: f64,
    limit: usize,
) -> (Subspace<T>, usize) {
    let room = limit.saturating_sub(sub.locked);
    let newly = residual_norms
        .iter()
        .take(room)
        .take_while(|&&r| r < tol)
        .count();
    let locked = sub.locked + newly;
    (Subspace { locked, ..sub }, newly)
}

/// Upper bound on the condition number of an n×ℓ standard normal block,
/// from the singular value concentration `√n ± √ℓ ± t` at `t = 6`.
pub fn gaussian_cond_bound(n: usize, ell: usize) -> f64 {
    let (sn, sl) = ((n as f64).sqrt(), (ell as f64).sqrt());
    let den = sn - sl - 6.0;
    if den <= 1.0 {
        f64::INFINITY
    } else {
        (sn + sl + 6.0) / den
    }
}

/// Hook receiving each block just before it is orthonormalized; the
/// returned value is recorded as the exact condition number.
pub type Observer<'a, T> = dyn FnMut(usize, &DenseMatrix<T>) -> Option<f64> + 'a;

pub fn solve<T: Scalar, A: HermitianOperator<T> + ?Sized>(
    a: &A,
    config: &SolverConfig,
    initial_guess: Option<&DenseMatrix<T>>,
) -> Result<SolveResult<T>> {
    solve_observed(a, config, initial_guess, &mut |_, _| None)
}

fn orthonormalize<T: Scalar>(
    z: &DenseMatrix<T>,
    est: f64,
    config: &SolverConfig,
) -> Result<(DenseMatrix<T>, QrChoice, f64)> {
    let start = Instant::now();
    let variant = match config.qr_mode {
        QrMode::Dynamic => select_variant(est, &config.qr_config),
        QrMode::HouseholderOnly => QrVariant::Householder,
        QrMode::Forced(v) => v,
    };
    let out = run_variant(z, variant, est, &config.qr_config)?;
    Ok((out.q, out.choice, start.elapsed().as_secs_f64()))
}

fn initial_block<T: Scalar>(
    n: usize,
    ell: usize,
    seed: u64,
    guess: Option<&DenseMatrix<T>>,
) -> Result<DenseMatrix<T>> {
    let mut rng = crate::seeded_rng(seed, 1);
    let random = DenseMatrix::random_normal(n, ell, &mut rng);
    let Some(g) = guess else {
        return Ok(random);
    };
    if g.rows() != n || g.cols() == 0 || g.cols() > ell {
        return dim_err(
            "solve",
            format!("initial guess {:?} for n = {n}, ℓ = {ell}", g.shape()),
        );
    }
    g.hcat(&random.columns(g.cols()..ell))
}

fn extremes(v: &[f64]) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    let mx = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mn = v.iter().copied().fold(f64::INFINITY, f64::min);
    (Some(mx), Some(mn))
}

/// Full solve. `observer` sees every pre-QR block (iteration 0 is the
/// initial random block).
pub fn solve_observed<T: Scalar, A: HermitianOperator<T> + ?Sized>(
    a: &A,
    config: &SolverConfig,
    initial_guess: Option<&DenseMatrix<T>>,
    observer: &mut Observer<'_, T>,
) -> Result<SolveResult<T>> {
    let n = a.dim();
    config.validate(n)?;
    let ell = config.ell();
    let nev = config.nev;
    if let Some(d) = a.dense() {
        let defect = d.hermitian_defect();
        if defect > 1e-12 * d.frobenius_norm() {
            return contract_err("solve", format!("operator is not Hermitian (defect {defect:e})"));
        }
    }
    let bounds = match config.spectral_override {
        Some(b) => b,
        None => lanczos_bounds(a, ell, config.lanczos_steps, config.seed)?,
    };
    let tol = if config.relative_tol {
        config.tol * bounds.upper_bound.abs().max(bounds.lower_est.abs())
    } else {
        config.tol
    };

    let v0 = initial_block(n, ell, config.seed, initial_guess)?;
    let est0 = if initial_guess.is_some() {
        f64::INFINITY
    } else {
        gaussian_cond_bound(n, ell)
    };
    let cond_exact = observer(0, &v0);
    let (q, choice, qr_seconds) = orthonormalize(&v0, est0, config)?;
    let mut traces = vec![IterationTrace {
        iter: 0,
        locked: 0,
        deg_min: 0,
        deg_max: 0,
        cond_est: est0,
        cond_exact,
        qr: choice,
        res_max: None,
        res_min: None,
        matvecs_cumulative: 0,
        estimate: None,
        orthogonality: q.orthogonality_defect(),
        qr_seconds,
        degree_warnings: 0,
        newly_locked: 0,
    }];

    let mut sub = Subspace {
        block: q,
        locked: 0,
        ritz_values: Vec::new(),
    };
    let mut active_res: Vec<f64> = Vec::new();
    let mut matvecs = 0;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=config.max_iterations {
        iterations = iter;
        let k = sub.locked;
        let first = iter == 1;
        let alpha = if first {
            bounds.inner_edge
        } else {
            sub.ritz_values[ell - 1]
        };
        let interval = FilterInterval::from_edges(alpha, bounds.upper_bound)?;
        let (shift, lambda1) = if first {
            (bounds.lower_est, bounds.lower_est)
        } else {
            (sub.ritz_values[k], sub.ritz_values[0])
        };

        let active = ell - k;
        let (schedule, warnings) = if first || !config.degree_opt {
            (DegreeSchedule::constant(config.base_degree, active), Vec::new())
        } else {
            choose_degrees(
                &sub.ritz_values[k..],
                &active_res,
                &interval,
                tol,
                config.base_degree,
                config.max_degree,
            )?
        };

        let filtered = filter_block(a, &sub.block.columns(k..ell), &interval, shift, &schedule)?;
        matvecs += filtered.matvec_count;

        let eta_mode = match config.eta {
            EtaChoice::One => EtaMode::One,
            EtaChoice::Formula => {
                let below = sub
                    .ritz_values
                    .iter()
                    .rev()
                    .copied()
                    .find(|&t| t < alpha)
                    .unwrap_or(alpha);
                EtaMode::Formula {
                    lambda_ell_est: below,
                }
            }
        };
        let active_ritz = if first { &[][..] } else { &sub.ritz_values[k..] };
        let estimate = estimate_locked(&interval, active_ritz, &schedule, k, lambda1, eta_mode)?;

        let locked_block = sub.block.columns(0..k);
        let z = locked_block.hcat(&filtered.filtered)?;
        let cond_exact = observer(iter, &z);
        let (mut q, choice, qr_seconds) = orthonormalize(&z, estimate.bound, config)?;
        q.set_columns(0, &locked_block)?;
        let orthogonality = q.orthogonality_defect();

        let rr = rayleigh_ritz(a, &q, k)?;
        let va = rr.rotated.columns(k..ell);
        let res = residuals(a, &va, &rr.ritz_values)?;
        let mut ritz = sub.ritz_values.clone();
        ritz.truncate(k);
        ritz.extend_from_slice(&rr.ritz_values);
        let (next, newly) = lock_and_deflate(
            Subspace {
                block: rr.rotated,
                locked: k,
                ritz_values: ritz,
            },
            &res,
            tol,
            nev,
        );
        let (res_max, res_min) = extremes(&res);
        traces.push(IterationTrace {
            iter,
            locked: k,
            deg_min: schedule.first().unwrap_or(0),
            deg_max: schedule.last().unwrap_or(0),
            cond_est: estimate.bound,
            cond_exact,
            qr: choice,
            res_max,
            res_min,
            matvecs_cumulative: matvecs,
            estimate: Some(estimate),
            orthogonality,
            qr_seconds,
            degree_warnings: warnings.len(),
            newly_locked: newly,
        });
        active_res = res[newly..].to_vec();
        sub = next;
        if sub.locked >= nev {
            converged = true;
            break;
        }
    }

    let (eigenvalues, eigenvectors) = if sub.ritz_values.len() < nev {
        (Vec::new(), DenseMatrix::zeros(n, 0))
    } else {
        let mut order: Vec<usize> = (0..nev).collect();
        order.sort_by(|&i, &j| sub.ritz_values[i].total_cmp(&sub.ritz_values[j]));
        (
            order.iter().map(|&i| sub.ritz_values[i]).collect(),
            sub.block.select_columns(&order),
        )
    };
    let final_residuals = if eigenvalues.is_empty() {
        Vec::new()
    } else {
        residuals(a, &eigenvectors, &eigenvalues)?
    };
    Ok(SolveResult {
        eigenvalues,
        eigenvectors,
        iterations,
        matvecs,
        traces,
        converged,
        final_residuals,
        spectral: bounds,
        tol_used: tol,
    })
}
