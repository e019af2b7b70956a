//! Condition-trace and QR-comparison experiments.

use std::time::Instant;

use chase_core::dense::{jacobi_svd_cond, DenseMatrix};
use chase_core::qr::{QrConfig, QrVariant};
use chase_core::solver::{solve_observed, QrMode, SolveResult, SolverConfig};
use chase_core::{Scalar, ScalarKind};
use num_complex::Complex64;

use crate::matgen::{gen_matrix, MatrixSpec};
use crate::mm::AnyMatrix;
use crate::trace::{eigenvalues_hash, ModeSummary};
use crate::{HarnessError, Result};

/// Largest `n·ℓ` for which the exact SVD oracle is run.
pub const ORACLE_BUDGET: usize = 1 << 22;

pub fn generate(spec: &MatrixSpec) -> Result<(AnyMatrix, Vec<f64>)> {
    Ok(match spec.kind {
        ScalarKind::Real64 => {
            let (a, l) = gen_matrix::<f64>(spec)?;
            (AnyMatrix::Real(a), l)
        }
        ScalarKind::Complex128 => {
            let (a, l) = gen_matrix::<Complex64>(spec)?;
            (AnyMatrix::Complex(a), l)
        }
    })
}

#[derive(Debug, Clone)]
pub struct RunRecord<T> {
    pub label: String,
    pub result: SolveResult<T>,
    pub wall_s: f64,
    /// Iterations where the estimate fell below the oracle value.
    pub violations: Vec<usize>,
}

impl<T> RunRecord<T> {
    pub fn qr_seconds(&self) -> f64 {
        self.result.traces.iter().map(|t| t.qr_seconds).sum()
    }

    pub fn summary(&self) -> ModeSummary {
        ModeSummary {
            iterations: self.result.iterations,
            matvecs: self.result.matvecs,
            wall_s: self.wall_s,
            qr_s: self.qr_seconds(),
            eigenvalues_hash: eigenvalues_hash(&self.result.eigenvalues),
            converged: self.result.converged,
            qr_variants: self
                .result
                .traces
                .iter()
                .map(|t| t.qr.variant.name().to_string())
                .collect(),
        }
    }

    /// `cholqr1` chosen by the estimator only below its threshold.
    pub fn cholqr1_only_below(&self, threshold: f64) -> bool {
        self.result
            .traces
            .iter()
            .filter(|t| t.qr.variant == QrVariant::CholQr1)
            .all(|t| t.cond_est < threshold)
    }
}

pub fn check_oracle_budget(n: usize, ell: usize) -> Result<()> {
    if n.saturating_mul(ell) > ORACLE_BUDGET {
        return Err(HarnessError::Contract(format!(
            "oracle budget exceeded: n·ℓ = {} > {ORACLE_BUDGET}",
            n.saturating_mul(ell)
        )));
    }
    Ok(())
}

/// One solve, optionally with the exact condition number of every
/// pre-QR block.
pub fn run_one<T: Scalar>(
    a: &DenseMatrix<T>,
    config: &SolverConfig,
    label: &str,
    with_exact: bool,
) -> Result<RunRecord<T>> {
    if with_exact {
        check_oracle_budget(a.rows(), config.ell())?;
    }
    let mut oracle = |_: usize, z: &DenseMatrix<T>| {
        with_exact.then(|| jacobi_svd_cond(z).map_or(f64::NAN, |c| c.cond2))
    };
    let start = Instant::now();
    let result = solve_observed(a, config, None, &mut oracle)?;
    let wall_s = start.elapsed().as_secs_f64();
    let violations = result
        .traces
        .iter()
        .filter(|t| t.cond_exact.is_some_and(|x| !(t.cond_est >= x)))
        .map(|t| t.iter)
        .collect();
    Ok(RunRecord {
        label: label.to_string(),
        result,
        wall_s,
        violations,
    })
}

/// Runs each requested degree mode (`true` = optimized degrees).
pub fn run_cond_trace<T: Scalar>(
    a: &DenseMatrix<T>,
    config: &SolverConfig,
    opt_modes: &[bool],
    with_exact: bool,
) -> Result<Vec<RunRecord<T>>> {
    opt_modes
        .iter()
        .map(|&opt| {
            let c = SolverConfig {
                degree_opt: opt,
                ..config.clone()
            };
            run_one(a, &c, if opt { "opt" } else { "noopt" }, with_exact)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CompareReport<T> {
    pub dynamic: RunRecord<T>,
    pub householder: RunRecord<T>,
    pub max_eig_diff: f64,
    /// `max(|λ_lower|, |λ_upper|)` from the spectral estimates.
    pub norm_est: f64,
    pub iteration_delta: i64,
    pub matvec_rel_diff: f64,
}

impl<T> CompareReport<T> {
    pub fn eigenvalues_agree(&self) -> bool {
        self.dynamic.result.eigenvalues.len() == self.householder.result.eigenvalues.len()
            && self.max_eig_diff <= 1e-9 * self.norm_est
    }

    pub fn iterations_close(&self) -> bool {
        self.iteration_delta.abs() <= 1
    }

    pub fn matvecs_close(&self) -> bool {
        self.matvec_rel_diff <= 0.01
    }
}

/// Dynamic QR against Householder-only, same seed and settings.
pub fn run_compare_qr<T: Scalar>(
    a: &DenseMatrix<T>,
    config: &SolverConfig,
    with_exact: bool,
) -> Result<CompareReport<T>> {
    let dynamic = run_one(
        a,
        &SolverConfig {
            qr_mode: QrMode::Dynamic,
            ..config.clone()
        },
        "dynamic",
        with_exact,
    )?;
    let householder = run_one(
        a,
        &SolverConfig {
            qr_mode: QrMode::HouseholderOnly,
            ..config.clone()
        },
        "householder",
        false,
    )?;
    Ok(compare(dynamic, householder))
}

pub fn compare<T>(dynamic: RunRecord<T>, householder: RunRecord<T>) -> CompareReport<T> {
    let (d, h) = (&dynamic.result, &householder.result);
    let max_eig_diff = if d.eigenvalues.len() == h.eigenvalues.len() {
        d.eigenvalues
            .iter()
            .zip(&h.eigenvalues)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let norm_est = d.spectral.upper_bound.abs().max(d.spectral.lower_est.abs());
    let iteration_delta = d.iterations as i64 - h.iterations as i64;
    let denom = d.matvecs.max(h.matvecs).max(1) as f64;
    let matvec_rel_diff = (d.matvecs as f64 - h.matvecs as f64).abs() / denom;
    CompareReport {
        dynamic,
        householder,
        max_eig_diff,
        norm_est,
        iteration_delta,
        matvec_rel_diff,
    }
}

/// `cholqr1` threshold of the default configuration.
pub fn cholqr1_threshold() -> f64 {
    QrConfig::default().cholqr1_threshold
}
