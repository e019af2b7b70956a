//! CholeskyQR family with condition-driven selection and a Householder
//! fallback.

use std::fmt;

use thiserror::Error;

use crate::dense::{cholesky, gram, householder_qr, solve_upper_right, DenseMatrix};
use crate::error::{contract_err, Error};
use crate::scalar::{Scalar, UNIT_ROUNDOFF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QrVariant {
    CholQr1,
    CholQr2,
    ShiftedCholQr2,
    /// Householder chosen up front (reference runs and forced modes).
    Householder,
    /// Householder after a Cholesky breakdown.
    HouseholderFallback,
}

impl QrVariant {
    pub fn name(self) -> &'static str {
        match self {
            QrVariant::CholQr1 => "cholqr1",
            QrVariant::CholQr2 => "cholqr2",
            QrVariant::ShiftedCholQr2 => "shifted_cholqr2",
            QrVariant::Householder => "householder",
            QrVariant::HouseholderFallback => "householder_fallback",
        }
    }
}

impl fmt::Display for QrVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What the engine did for one factorization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrChoice {
    pub variant: QrVariant,
    pub est_cond_used: f64,
    /// Shift added to the Gram matrix; set only for `ShiftedCholQr2`.
    pub shift_applied: Option<f64>,
    pub cholesky_failures: usize,
}

/// Norm entering the shift `s = 11(mn + n(n+1))·u·norm`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftNorm {
    /// `‖X‖_F`.
    #[default]
    Frobenius,
    /// `‖X‖_F²`, an upper bound on `‖X‖₂²`.
    FrobeniusSquared,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QrConfig {
    /// Estimates above this take the shifted path.
    pub shifted_threshold: f64,
    /// Estimates below this take a single CholeskyQR pass.
    pub cholqr1_threshold: f64,
    pub shift_norm: ShiftNorm,
}

impl Default for QrConfig {
    fn default() -> Self {
        Self {
            shifted_threshold: 1e8,
            cholqr1_threshold: 20.0,
            shift_norm: ShiftNorm::Frobenius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CholQrError {
    #[error("Cholesky breakdown in round {round} at pivot {pivot}")]
    Breakdown { round: usize, pivot: usize },
    #[error(transparent)]
    Invalid(#[from] Error),
}

/// One CholeskyQR round: `X·U⁻¹` with `UᴴU = XᴴX`, or the failing pivot.
fn cholqr_round<T: Scalar>(
    x: &DenseMatrix<T>,
    shift: f64,
) -> crate::Result<Result<DenseMatrix<T>, usize>> {
    let mut r = gram(x)?;
    if shift != 0.0 {
        for i in 0..r.rows() {
            r[(i, i)] += T::from_real(shift);
        }
    }
    match cholesky(&r)? {
        Ok(u) => Ok(Ok(solve_upper_right(x, &u)?)),
        Err(f) => Ok(Err(f.pivot)),
    }
}

/// `chol_deg` rounds of CholeskyQR.
pub fn cholesky_qr<T: Scalar>(
    x: &DenseMatrix<T>,
    chol_deg: usize,
) -> Result<DenseMatrix<T>, CholQrError> {
    if x.rows() < x.cols() {
        return Err(CholQrError::Invalid(Error::DimensionMismatch {
            op: "cholesky_qr",
            detail: format!("{} rows < {} columns", x.rows(), x.cols()),
        }));
    }
    if !(1..=2).contains(&chol_deg) {
        return Err(CholQrError::Invalid(Error::ContractViolation {
            op: "cholesky_qr",
            detail: format!("chol_deg = {chol_deg}"),
        }));
    }
    let mut q = x.clone();
    for round in 1..=chol_deg {
        q = cholqr_round(&q, 0.0)?.map_err(|pivot| CholQrError::Breakdown { round, pivot })?;
    }
    Ok(q)
}

/// `11(mn + n(n+1))·u·norm` for an m×n block.
pub fn shift_for<T: Scalar>(x: &DenseMatrix<T>, norm: ShiftNorm) -> f64 {
    let (m, n) = (x.rows() as f64, x.cols() as f64);
    let f = x.frobenius_norm();
    let nrm = match norm {
        ShiftNorm::Frobenius => f,
        ShiftNorm::FrobeniusSquared => f * f,
    };
    11.0 * (m * n + n * (n + 1.0)) * UNIT_ROUNDOFF * nrm
}

#[derive(Debug, Clone, PartialEq)]
pub struct QrOutput<T> {
    pub q: DenseMatrix<T>,
    pub choice: QrChoice,
}

fn householder_q<T: Scalar>(x: &DenseMatrix<T>) -> crate::Result<DenseMatrix<T>> {
    Ok(householder_qr(x)?.q)
}

fn fallback<T: Scalar>(x: &DenseMatrix<T>, est: f64) -> crate::Result<QrOutput<T>> {
    Ok(QrOutput {
        q: householder_q(x)?,
        choice: QrChoice {
            variant: QrVariant::HouseholderFallback,
            est_cond_used: est,
            shift_applied: None,
            cholesky_failures: 1,
        },
    })
}

fn check_tall<T: Scalar>(x: &DenseMatrix<T>, op: &'static str) -> crate::Result<()> {
    if x.rows() < x.cols() || x.cols() == 0 {
        return contract_err(op, format!("needs rows ≥ cols ≥ 1, got {:?}", x.shape()));
    }
    Ok(())
}

/// Shifted Cholesky of the Gram matrix, one triangular solve, then
/// CholeskyQR2; any breakdown falls back to Householder.
pub fn shifted_cholesky_qr2<T: Scalar>(x: &DenseMatrix<T>) -> crate::Result<QrOutput<T>> {
    shifted_with(x, f64::INFINITY, ShiftNorm::default())
}

fn shifted_with<T: Scalar>(
    x: &DenseMatrix<T>,
    est: f64,
    norm: ShiftNorm,
) -> crate::Result<QrOutput<T>> {
    check_tall(x, "shifted_cholesky_qr2")?;
    let s = shift_for(x, norm);
    let first = match cholqr_round(x, s)? {
        Ok(y) => y,
        Err(_) => return fallback(x, est),
    };
    match cholesky_qr(&first, 2) {
        Ok(q) => Ok(QrOutput {
            q,
            choice: QrChoice {
                variant: QrVariant::ShiftedCholQr2,
                est_cond_used: est,
                shift_applied: Some(s),
                cholesky_failures: 0,
            },
        }),
        Err(CholQrError::Breakdown { .. }) => fallback(x, est),
        Err(CholQrError::Invalid(e)) => Err(e),
    }
}

/// Variant dictated by the estimate. NaN is treated as unbounded.
pub fn select_variant(est_cond: f64, config: &QrConfig) -> QrVariant {
    // Comparisons in log space so +inf and huge values order correctly.
    let l = if est_cond.is_nan() {
        f64::INFINITY
    } else {
        est_cond.ln()
    };
    if l > config.shifted_threshold.ln() {
        QrVariant::ShiftedCholQr2
    } else if l < config.cholqr1_threshold.ln() {
        QrVariant::CholQr1
    } else {
        QrVariant::CholQr2
    }
}

/// Runs one specific variant. `Householder` skips Cholesky entirely.
pub fn run_variant<T: Scalar>(
    x: &DenseMatrix<T>,
    variant: QrVariant,
    est_cond: f64,
    config: &QrConfig,
) -> crate::Result<QrOutput<T>> {
    check_tall(x, "qr")?;
    let deg = match variant {
        QrVariant::ShiftedCholQr2 => return shifted_with(x, est_cond, config.shift_norm),
        QrVariant::Householder | QrVariant::HouseholderFallback => {
            return Ok(QrOutput {
                q: householder_q(x)?,
                choice: QrChoice {
                    variant: QrVariant::Householder,
                    est_cond_used: est_cond,
                    shift_applied: None,
                    cholesky_failures: 0,
                },
            })
        }
        QrVariant::CholQr1 => 1,
        QrVariant::CholQr2 => 2,
    };
    match cholesky_qr(x, deg) {
        Ok(q) => Ok(QrOutput {
            q,
            choice: QrChoice {
                variant,
                est_cond_used: est_cond,
                shift_applied: None,
                cholesky_failures: 0,
            },
        }),
        Err(CholQrError::Breakdown { .. }) => fallback(x, est_cond),
        Err(CholQrError::Invalid(e)) => Err(e),
    }
}

/// Condition-driven QR with the default thresholds.
pub fn dynamic_caqr<T: Scalar>(x: &DenseMatrix<T>, est_cond: f64) -> crate::Result<QrOutput<T>> {
    dynamic_caqr_with(x, est_cond, &QrConfig::default())
}

pub fn dynamic_caqr_with<T: Scalar>(
    x: &DenseMatrix<T>,
    est_cond: f64,
    config: &QrConfig,
) -> crate::Result<QrOutput<T>> {
    run_variant(x, select_variant(est_cond, config), est_cond, config)
}
