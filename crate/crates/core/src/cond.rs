//! Upper bounds on the condition number of a filtered block, built from
//! the filter interval, Ritz values and polynomial degrees only.
//!
//! All products of powers are accumulated as logarithms; a bound whose
//! logarithm exceeds `ln(1e300)` is reported as `+inf`.

use std::fmt;

use crate::error::{contract_err, Result};
use crate::filter::DegreeSchedule;
use crate::spectral::{rho_of, FilterInterval};

/// How the constant `η` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaMode {
    One,
    /// `η = (x + 1)/(x(x − 1))` with `x = ρ(λ_ℓ)^{m_ℓ}`.
    Formula { lambda_ell_est: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Uniform,
    Optimized,
    Locked,
}

impl Regime {
    pub fn name(self) -> &'static str {
        match self {
            Regime::Uniform => "uniform",
            Regime::Optimized => "optimized",
            Regime::Locked => "locked",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CondEstimate {
    pub bound: f64,
    pub ln_bound: f64,
    pub eta: f64,
    pub rho_first: f64,
    pub rho_after_lock: Option<f64>,
    pub degree_max: usize,
    pub degree_after_lock: Option<usize>,
    pub locked: usize,
    pub regime: Regime,
    /// `η` hit its cap because `ρ(λ_ℓ)^{m_ℓ}` was too close to 1.
    pub eta_capped: bool,
    /// The first active Ritz value lay inside the interval, so `ρ₁` was
    /// used in its place.
    pub lock_fallback: bool,
}

/// Value substituted for `η` when the formula diverges.
pub const ETA_CAP: f64 = 1e8;
const ETA_GUARD: f64 = 1e-8;
/// Logarithms above this map to `+inf`.
pub const LN_BOUND_CAP: f64 = 690.775_527_898_213_7; // ln(1e300)

fn exp_bound(ln: f64) -> f64 {
    if ln.is_nan() || ln > LN_BOUND_CAP {
        f64::INFINITY
    } else {
        ln.exp().max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eta {
    pub value: f64,
    pub capped: bool,
}

/// `η` for the given mode and highest degree `m_ell`.
pub fn eta_factor(interval: &FilterInterval, m_ell: usize, mode: EtaMode) -> Eta {
    let lambda_ell_est = match mode {
        EtaMode::One => {
            return Eta {
                value: 1.0,
                capped: false,
            }
        }
        EtaMode::Formula { lambda_ell_est } => lambda_ell_est,
    };
    let capped = Eta {
        value: ETA_CAP,
        capped: true,
    };
    let Ok(rho) = rho_of(lambda_ell_est, interval) else {
        return capped;
    };
    let ln_x = m_ell as f64 * rho.ln();
    if ln_x <= ETA_GUARD.ln_1p() {
        return capped;
    }
    Eta {
        value: eta_from_power(ln_x.exp()),
        capped: false,
    }
}

/// `(x + 1)/(x(x − 1))`, finite for every `x > 1`.
pub fn eta_from_power(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    (x + 1.0) / (x * (x - 1.0))
}

fn finish(
    ln_bound: f64,
    eta: Eta,
    rho_first: f64,
    degree_max: usize,
    regime: Regime,
) -> CondEstimate {
    CondEstimate {
        bound: exp_bound(ln_bound),
        ln_bound,
        eta: eta.value,
        rho_first,
        rho_after_lock: None,
        degree_max,
        degree_after_lock: None,
        locked: 0,
        regime,
        eta_capped: eta.capped,
        lock_fallback: false,
    }
}

/// `η·ρ₁^m` for a constant degree `m`.
pub fn estimate_uniform(
    interval: &FilterInterval,
    lambda1_est: f64,
    m: usize,
    eta_mode: EtaMode,
) -> Result<CondEstimate> {
    let rho1 = rho_of(lambda1_est, interval)?;
    let eta = eta_factor(interval, m, eta_mode);
    let ln = eta.value.ln() + m as f64 * rho1.ln();
    Ok(finish(ln, eta, rho1, m, Regime::Uniform))
}

/// `η·ρ₁^{m_ℓ}` with `m_ℓ` the largest degree. A constant schedule is
/// the uniform case and is reported as such.
pub fn estimate_optimized(
    interval: &FilterInterval,
    lambda1_est: f64,
    schedule: &DegreeSchedule,
    eta_mode: EtaMode,
) -> Result<CondEstimate> {
    let Some(m_ell) = schedule.last() else {
        return contract_err("estimate_optimized", "empty degree schedule");
    };
    let mut est = estimate_uniform(interval, lambda1_est, m_ell, eta_mode)?;
    if !schedule.is_constant() {
        est.regime = Regime::Optimized;
    }
    Ok(est)
}

/// `η·ρ_{k+1}^{m_{k+1}}·ρ₁^{m_ℓ − m_{k+1}}` once `k` columns are locked.
///
/// `active_ritz` are the ascending Ritz values of the active columns and
/// `schedule` their degrees, so `active_ritz[0]` is `θ_{k+1}`. With no
/// locked columns this is [`estimate_optimized`].
pub fn estimate_locked(
    interval: &FilterInterval,
    active_ritz: &[f64],
    schedule: &DegreeSchedule,
    locked: usize,
    lambda1_est: f64,
    eta_mode: EtaMode,
) -> Result<CondEstimate> {
    if locked == 0 {
        return estimate_optimized(interval, lambda1_est, schedule, eta_mode);
    }
    let (Some(m_first), Some(m_ell)) = (schedule.first(), schedule.last()) else {
        return contract_err("estimate_locked", "empty degree schedule");
    };
    let Some(&theta) = active_ritz.first() else {
        return contract_err("estimate_locked", "no active Ritz values");
    };
    let rho1 = rho_of(lambda1_est, interval)?;
    let (rho_k1, fallback) = match rho_of(theta, interval) {
        Ok(r) => (r, false),
        Err(_) => (rho1, true),
    };
    let eta = eta_factor(interval, m_ell, eta_mode);
    let ln = eta.value.ln() + m_first as f64 * rho_k1.ln() + (m_ell - m_first) as f64 * rho1.ln();
    let mut est = finish(ln, eta, rho1, m_ell, Regime::Locked);
    est.rho_after_lock = Some(rho_k1);
    est.degree_after_lock = Some(m_first);
    est.locked = locked;
    est.lock_fallback = fallback;
    Ok(est)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> FilterInterval {
        FilterInterval::from_edges(-1.0, 1.0).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn uniform_closed_form() {
        let e = estimate_uniform(&unit(), -2.0, 20, EtaMode::One).unwrap();
        let expect = (2.0 + 3f64.sqrt()).powi(20);
        assert!(rel(e.bound, expect) < 1e-13);
        assert!(rel(e.bound, 2.7476e11) < 1e-4);
        assert_eq!(e.regime, Regime::Uniform);
        assert_eq!(e.eta, 1.0);
    }

    #[test]
    fn zero_degree_gives_eta() {
        let e = estimate_uniform(&unit(), -3.0, 0, EtaMode::One).unwrap();
        assert_eq!(e.bound, 1.0);
    }

    #[test]
    fn grazing_lower_estimate() {
        let e = estimate_uniform(&unit(), -1.0 - 1e-12, 20, EtaMode::One).unwrap();
        assert!(e.rho_first > 1.0 && e.rho_first < 1.0 + 1e-5);
        assert!(e.bound >= 1.0 && e.bound < 1.001);
    }

    #[test]
    fn inside_interval_is_an_error() {
        assert!(estimate_uniform(&unit(), 0.5, 10, EtaMode::One).is_err());
    }

    #[test]
    fn optimized_uses_largest_degree() {
        let s = DegreeSchedule::new(vec![5, 10, 36], 36).unwrap();
        let e = estimate_optimized(&unit(), -2.0, &s, EtaMode::One).unwrap();
        assert!(rel(e.bound, (2.0 + 3f64.sqrt()).powi(36)) < 1e-13);
        assert_eq!(e.regime, Regime::Optimized);
        let single = DegreeSchedule::new(vec![17], 36).unwrap();
        let a = estimate_optimized(&unit(), -2.5, &single, EtaMode::One).unwrap();
        let b = estimate_uniform(&unit(), -2.5, 17, EtaMode::One).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn locked_two_factor_form() {
        let s = DegreeSchedule::new(vec![20, 25, 30], 36).unwrap();
        let e = estimate_locked(&unit(), &[-1.5, -1.2, -1.1], &s, 4, -2.0, EtaMode::One).unwrap();
        let expect = (1.5 + 1.25f64.sqrt()).powi(20) * (2.0 + 3f64.sqrt()).powi(10);
        assert!(rel(e.bound, expect) < 1e-12);
        assert_eq!(e.regime, Regime::Locked);
        assert_eq!(e.locked, 4);
        assert_eq!(e.degree_after_lock, Some(20));
        assert_eq!(e.degree_max, 30);
        let recon = e.eta * e.rho_after_lock.unwrap().powi(20) * e.rho_first.powi(10);
        assert!(rel(e.bound, recon) < 1e-12);
    }

    #[test]
    fn locked_collapses_when_first_active_is_lambda1() {
        let s = DegreeSchedule::new(vec![12, 30], 36).unwrap();
        let e = estimate_locked(&unit(), &[-2.0, -1.5], &s, 2, -2.0, EtaMode::One).unwrap();
        assert!(rel(e.bound, (2.0 + 3f64.sqrt()).powi(30)) < 1e-12);
    }

    #[test]
    fn locked_inside_interval_falls_back() {
        let s = DegreeSchedule::new(vec![12, 30], 36).unwrap();
        let e = estimate_locked(&unit(), &[-0.5, 0.0], &s, 3, -2.0, EtaMode::One).unwrap();
        assert!(e.lock_fallback);
        assert!(rel(e.bound, (2.0 + 3f64.sqrt()).powi(30)) < 1e-12);
    }

    #[test]
    fn eta_modes() {
        let iv = unit();
        assert_eq!(eta_factor(&iv, 20, EtaMode::One).value, 1.0);
        assert_eq!(eta_from_power(2.0), 1.5);
        let x = 1.0 + 2f64.sqrt();
        assert!((eta_from_power(x) - 1.0).abs() <= 1e-12);
        // ρ^m = 1 + √2 via m = 1 and ρ = 1 + √2, i.e. t = −(ρ + 1/ρ)/2.
        let t = -(x + 1.0 / x) / 2.0;
        let eta = eta_factor(&iv, 1, EtaMode::Formula { lambda_ell_est: t });
        assert!((eta.value - 1.0).abs() <= 1e-12, "{}", eta.value);
        assert!(!eta.capped);
    }

    #[test]
    fn eta_guard_caps() {
        let iv = unit();
        let eta = eta_factor(&iv, 3, EtaMode::Formula { lambda_ell_est: -1.0 - 1e-20 });
        assert!(eta.capped);
        assert_eq!(eta.value, ETA_CAP);
        let eta = eta_factor(&iv, 3, EtaMode::Formula { lambda_ell_est: 0.3 });
        assert!(eta.capped);
        let eta = eta_factor(&iv, 0, EtaMode::Formula { lambda_ell_est: -3.0 });
        assert!(eta.capped);
    }

    #[test]
    fn overflow_maps_to_infinity() {
        let e = estimate_uniform(&unit(), -1e6, 64, EtaMode::One).unwrap();
        assert_eq!(e.bound, f64::INFINITY);
        assert!(e.ln_bound.is_finite());
    }

    proptest! {
        #[test]
        fn locked_zero_is_optimized_bitwise(
            degs in proptest::collection::vec(3usize..=36, 1..20),
            t1 in -50.0f64..-1.0001, eta_formula in any::<bool>(),
        ) {
            let mut degs = degs;
            degs.sort();
            let s = DegreeSchedule::new(degs, 36).unwrap();
            let mode = if eta_formula { EtaMode::Formula { lambda_ell_est: -1.01 } } else { EtaMode::One };
            let ritz = vec![t1 + 0.5; s.len()];
            let a = estimate_locked(&unit(), &ritz, &s, 0, t1, mode).unwrap();
            let b = estimate_optimized(&unit(), t1, &s, mode).unwrap();
            prop_assert_eq!(a.bound.to_bits(), b.bound.to_bits());
            prop_assert_eq!(a, b);
        }

        #[test]
        fn constant_optimized_is_uniform_bitwise(m in 0usize..=64, len in 1usize..40, t1 in -100.0f64..-1.0001) {
            let s = DegreeSchedule::constant(m, len);
            let a = estimate_optimized(&unit(), t1, &s, EtaMode::One).unwrap();
            let b = estimate_uniform(&unit(), t1, m, EtaMode::One).unwrap();
            prop_assert_eq!(a.bound.to_bits(), b.bound.to_bits());
            prop_assert_eq!(a, b);
        }

        #[test]
        fn nondecreasing_in_degree(m in 0usize..64, t1 in -100.0f64..-1.0001) {
            let a = estimate_uniform(&unit(), t1, m, EtaMode::One).unwrap();
            let b = estimate_uniform(&unit(), t1, m + 1, EtaMode::One).unwrap();
            prop_assert!(b.bound >= a.bound);
        }

        #[test]
        fn never_nan(m in 0usize..=64, rho in 1.000001f64..=100.0, formula in any::<bool>()) {
            let t = -(rho + 1.0 / rho) / 2.0;
            let mode = if formula { EtaMode::Formula { lambda_ell_est: t * 0.5 - 0.5 } } else { EtaMode::One };
            let e = estimate_uniform(&unit(), t, m, mode).unwrap();
            prop_assert!(!e.bound.is_nan());
            prop_assert!(e.bound >= 1.0);
        }
    }
}
