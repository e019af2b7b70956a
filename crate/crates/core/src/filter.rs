//! σ-scaled Chebyshev filter with per-column degrees.

use crate::dense::DenseMatrix;
use crate::error::{contract_err, dim_err, Result};
use crate::operator::HermitianOperator;
use crate::scalar::Scalar;
use crate::spectral::{convergence_ratio, FilterInterval};

/// Nondecreasing per-column filter degrees with a cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeSchedule {
    degrees: Vec<usize>,
    max_degree: usize,
}

impl DegreeSchedule {
    pub fn new(degrees: Vec<usize>, max_degree: usize) -> Result<Self> {
        if degrees.windows(2).any(|w| w[0] > w[1]) {
            return contract_err("DegreeSchedule", "degrees must be nondecreasing");
        }
        if let Some(&d) = degrees.iter().find(|&&d| d > max_degree) {
            return contract_err(
                "DegreeSchedule",
                format!("degree {d} exceeds the cap {max_degree}"),
            );
        }
        Ok(Self {
            degrees,
            max_degree,
        })
    }

    /// Same degree for every column.
    pub fn constant(degree: usize, len: usize) -> Self {
        Self {
            degrees: vec![degree; len],
            max_degree: degree,
        }
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.degrees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degrees.is_empty()
    }

    pub fn first(&self) -> Option<usize> {
        self.degrees.first().copied()
    }

    pub fn last(&self) -> Option<usize> {
        self.degrees.last().copied()
    }

    pub fn is_constant(&self) -> bool {
        self.degrees.windows(2).all(|w| w[0] == w[1])
    }
}

/// Scalars of the σ recurrence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterState {
    pub sigma_prev: f64,
    pub sigma_curr: f64,
    pub sigma_one: f64,
    pub lower_shift: f64,
}

impl FilterState {
    /// State after the first step: `σ₁ = e/(λ̃₁ − c)`.
    pub fn start(interval: &FilterInterval, lower_shift: f64) -> Result<Self> {
        let sigma_one = interval.half_width / (lower_shift - interval.center);
        if !sigma_one.is_finite() || sigma_one == 0.0 {
            return contract_err(
                "cheb_filter",
                format!("σ₁ = {sigma_one} for λ̃₁ = {lower_shift}"),
            );
        }
        Ok(Self {
            sigma_prev: 1.0,
            sigma_curr: sigma_one,
            sigma_one,
            lower_shift,
        })
    }

    /// `σ_i = 1/(2/σ₁ − σ_{i−1})`.
    pub fn advance(&mut self) {
        self.sigma_prev = self.sigma_curr;
        self.sigma_curr = 1.0 / (2.0 / self.sigma_one - self.sigma_prev);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput<T> {
    pub filtered: DenseMatrix<T>,
    /// Single-column products with `A` actually performed.
    pub matvec_count: usize,
}

fn check_interval(interval: &FilterInterval) -> Result<()> {
    if !(interval.half_width > 0.0) || !interval.half_width.is_finite() {
        return contract_err(
            "filter_block",
            format!("degenerate interval, half-width {}", interval.half_width),
        );
    }
    Ok(())
}

/// Column `a` of the result is `p_{m_a}(A)·v_a`. A column leaves the
/// recurrence once its degree is reached, and is no longer multiplied.
pub fn filter_block<T: Scalar, A: HermitianOperator<T> + ?Sized>(
    a: &A,
    v: &DenseMatrix<T>,
    interval: &FilterInterval,
    lower_est: f64,
    schedule: &DegreeSchedule,
) -> Result<FilterOutput<T>> {
    check_interval(interval)?;
    if v.cols() != schedule.len() || v.rows() != a.dim() {
        return dim_err(
            "filter_block",
            format!(
                "block {:?}, {} degrees, operator order {}",
                v.shape(),
                schedule.len(),
                a.dim()
            ),
        );
    }
    if interval.contains(lower_est) {
        return contract_err(
            "filter_block",
            format!("λ̃₁ = {lower_est} lies inside the filtered interval"),
        );
    }
    let degrees = schedule.degrees();
    let ell = v.cols();
    let n = v.rows();
    let max = schedule.last().unwrap_or(0);
    let c = interval.center;
    let e = interval.half_width;
    let mut state = FilterState::start(interval, lower_est)?;

    let mut curr = v.clone();
    let mut prev = v.clone();
    let mut matvecs = 0;
    for step in 1..=max {
        let s = degrees.partition_point(|&d| d < step);
        if s == ell {
            break;
        }
        let active = curr.columns(s..ell);
        let av = a.apply(&active)?;
        matvecs += ell - s;
        if step > 1 {
            state.advance();
        }
        let (g, h) = if step == 1 {
            (state.sigma_one / e, T::zero())
        } else {
            (
                2.0 * state.sigma_curr / e,
                T::from_real(state.sigma_prev * state.sigma_curr),
            )
        };
        for j in 0..ell - s {
            let col = s + j;
            let avj = av.col(j);
            let cj = curr.col(col);
            let pj = prev.col(col);
            let next: Vec<T> = (0..n)
                .map(|i| (avj[i] - cj[i].scale(c)).scale(g) - h * pj[i])
                .collect();
            prev.col_mut(col).copy_from_slice(cj);
            curr.col_mut(col).copy_from_slice(&next);
        }
    }
    Ok(FilterOutput {
        filtered: curr,
        matvec_count: matvecs,
    })
}

/// `p_m(λ)` by the same σ recurrence run on a scalar.
pub fn scalar_filter_value(
    lambda: f64,
    interval: &FilterInterval,
    lower_est: f64,
    m: usize,
) -> Result<f64> {
    check_interval(interval)?;
    if m == 0 {
        return Ok(1.0);
    }
    let c = interval.center;
    let e = interval.half_width;
    let mut state = FilterState::start(interval, lower_est)?;
    let mut prev = 1.0;
    let mut curr = state.sigma_one / e * (lambda - c);
    for _ in 2..=m {
        state.advance();
        let next =
            2.0 * state.sigma_curr / e * (lambda - c) * curr - state.sigma_prev * state.sigma_curr * prev;
        prev = curr;
        curr = next;
    }
    Ok(curr)
}

/// Degree floor for columns that need no further filtering.
pub const MIN_DEGREE: usize = 3;

/// Per-column degrees targeting `res·τ^m ≤ tol`, repaired to nondecreasing.
///
/// Returns the schedule and the indices of columns whose Ritz value sits
/// inside the interval (these get `max_degree`). Non-finite residuals get
/// `base_degree`.
pub fn choose_degrees(
    ritz_values: &[f64],
    residuals: &[f64],
    interval: &FilterInterval,
    tol: f64,
    base_degree: usize,
    max_degree: usize,
) -> Result<(DegreeSchedule, Vec<usize>)> {
    if ritz_values.len() != residuals.len() {
        return dim_err(
            "choose_degrees",
            format!("{} Ritz values, {} residuals", ritz_values.len(), residuals.len()),
        );
    }
    if !(tol > 0.0) {
        return contract_err("choose_degrees", format!("tol = {tol}"));
    }
    let floor = MIN_DEGREE.min(max_degree);
    let mut warnings = Vec::new();
    let mut degrees = Vec::with_capacity(ritz_values.len());
    for (a, (&theta, &res)) in ritz_values.iter().zip(residuals).enumerate() {
        let tau = match convergence_ratio(theta, interval) {
            Ok(t) if t < 1.0 => t,
            _ => {
                warnings.push(a);
                degrees.push(max_degree);
                continue;
            }
        };
        if !res.is_finite() {
            degrees.push(base_degree.clamp(floor, max_degree));
            continue;
        }
        let x = (tol / res.max(f64::MIN_POSITIVE)).ln() / tau.ln();
        // Absorb round-off so an exact integer ratio is not bumped up by one.
        let m = (x - 1e-9 * x.abs().max(1.0)).ceil();
        let m = if m.is_nan() || m < floor as f64 {
            floor
        } else if m >= max_degree as f64 {
            max_degree
        } else {
            m as usize
        };
        degrees.push(m);
    }
    let mut run = 0;
    for d in &mut degrees {
        run = run.max(*d);
        *d = run;
    }
    Ok((
        DegreeSchedule {
            degrees,
            max_degree,
        },
        warnings,
    ))
}
