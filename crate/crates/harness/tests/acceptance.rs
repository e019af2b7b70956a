//! Acceptance criteria 1–8, one PASS/FAIL line each.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use chase_core::cond::{
    eta_factor, eta_from_power, estimate_locked, estimate_optimized, estimate_uniform, EtaMode,
};
use chase_core::dense::{householder_qr, matmul, DenseMatrix};
use chase_core::filter::{filter_block, scalar_filter_value, DegreeSchedule};
use chase_core::operator::DiagonalOperator;
use chase_core::qr::{cholesky_qr, run_variant, select_variant, CholQrError, QrConfig, QrVariant};
use chase_core::solver::{IterationTrace, SolverConfig};
use chase_core::spectral::{cheb_scalar, rho_of, FilterInterval};
use chase_core::{seeded_rng, Scalar, ScalarKind};
use chase_harness::experiments::{compare, run_one, RunRecord};
use chase_harness::matgen::{gen_matrix, Basis, MatrixSpec, Spectrum};
use num_complex::Complex64;
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

struct RunStats {
    traces: Vec<IterationTrace>,
    iterations: usize,
    matvecs: usize,
    converged: bool,
    eigenvalues: Vec<f64>,
    final_residuals: Vec<f64>,
    tol: f64,
    violations: Vec<usize>,
}

impl RunStats {
    fn of<T>(r: &RunRecord<T>) -> Self {
        Self {
            traces: r.result.traces.clone(),
            iterations: r.result.iterations,
            matvecs: r.result.matvecs,
            converged: r.result.converged,
            eigenvalues: r.result.eigenvalues.clone(),
            final_residuals: r.result.final_residuals.clone(),
            tol: r.result.tol_used,
            violations: r.violations.clone(),
        }
    }

    fn max_ratio(&self) -> f64 {
        self.traces
            .iter()
            .filter_map(|t| t.cond_exact.map(|x| t.cond_est / x))
            .fold(0.0, f64::max)
    }
}

struct Entry {
    name: String,
    ell: usize,
    truth: Vec<f64>,
    opt: RunStats,
    noopt: RunStats,
    householder: RunStats,
    max_eig_diff: f64,
    norm_est: f64,
    seconds: f64,
}

fn run_entry<T: Scalar>(name: String, spec: &MatrixSpec, nev: usize, nex: usize) -> Entry {
    let start = Instant::now();
    let (a, truth) = gen_matrix::<T>(spec).expect("matrix generation");
    let mut config = SolverConfig::new(nev, nex);
    config.seed = spec.seed;
    let opt = run_one(&a, &config, "opt", true).expect("opt run");
    let noopt = run_one(
        &a,
        &SolverConfig {
            degree_opt: false,
            ..config.clone()
        },
        "noopt",
        true,
    )
    .expect("noopt run");
    let hh = run_one(
        &a,
        &SolverConfig {
            qr_mode: chase_core::solver::QrMode::HouseholderOnly,
            ..config.clone()
        },
        "householder",
        false,
    )
    .expect("householder run");
    let (opt_stats, hh_stats) = (RunStats::of(&opt), RunStats::of(&hh));
    let cmp = compare(opt, hh);
    Entry {
        name,
        ell: nev + nex,
        truth,
        opt: opt_stats,
        noopt: RunStats::of(&noopt),
        householder: hh_stats,
        max_eig_diff: cmp.max_eig_diff,
        norm_est: cmp.norm_est,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn suite() -> &'static Vec<Entry> {
    static SUITE: OnceLock<Vec<Entry>> = OnceLock::new();
    SUITE.get_or_init(|| {
        let spec = |n, spectrum, kind, seed| MatrixSpec {
            n,
            spectrum,
            kind,
            basis: Basis::Random,
            seed,
        };
        let uniform = |lo, hi| Spectrum::Uniform { lo, hi };
        let clustered = |lo, hi, cluster_frac| Spectrum::ClusteredDft {
            lo,
            hi,
            cluster_frac,
        };
        let cases: Vec<(&str, MatrixSpec, usize, usize)> = vec![
            ("real uniform n=500", spec(500, uniform(1.0, 500.0), ScalarKind::Real64, 1), 20, 10),
            ("complex clustered n=500", spec(500, clustered(-10.0, 90.0, 0.1), ScalarKind::Complex128, 2), 20, 10),
            ("real clustered n=1000", spec(1000, clustered(-2.0, 8.0, 0.2), ScalarKind::Real64, 3), 50, 20),
            ("complex uniform n=1000", spec(1000, uniform(-5.0, 5.0), ScalarKind::Complex128, 4), 50, 20),
            ("real clustered-dft n=2000", spec(2000, clustered(-10.0, 90.0, 0.1), ScalarKind::Real64, 5), 100, 40),
            ("complex clustered n=1000", spec(1000, clustered(0.0, 50.0, 0.15), ScalarKind::Complex128, 6), 50, 20),
        ];
        cases
            .into_iter()
            .map(|(name, s, nev, nex)| {
                let e = match s.kind {
                    ScalarKind::Real64 => run_entry::<f64>(name.to_string(), &s, nev, nex),
                    ScalarKind::Complex128 => run_entry::<Complex64>(name.to_string(), &s, nev, nex),
                };
                eprintln!("  suite: {} done in {:.1}s", e.name, e.seconds);
                e
            })
            .collect()
    })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let suite = suite();
    let mut rows = 0;
    let mut worst = 0f64;
    for e in suite {
        for (label, r) in [("opt", &e.opt), ("noopt", &e.noopt)] {
            check(r.violations.is_empty(), || {
                format!("{} {label}: estimate below exact at iterations {:?}", e.name, r.violations)
            })?;
            check(r.traces.iter().all(|t| t.cond_exact.is_some_and(f64::is_finite)), || {
                format!("{} {label}: missing oracle value", e.name)
            })?;
            rows += r.traces.len();
            worst = worst.max(r.max_ratio());
        }
    }
    Ok(format!(
        "{} matrices x 2 modes, {rows} iterations, 0 violations, max est/exact {:.2e}, {:.0}s",
        suite.len(),
        worst,
        start.elapsed().as_secs_f64()
    ))
}

fn criterion_2() -> Outcome {
    let mut detail = Vec::new();
    for e in suite() {
        let (d, h) = (&e.opt, &e.householder);
        check(d.converged && h.converged, || format!("{}: a run did not converge", e.name))?;
        check(e.max_eig_diff <= 1e-9 * e.norm_est, || {
            format!("{}: max |dλ| = {:e} > 1e-9·{:.3e}", e.name, e.max_eig_diff, e.norm_est)
        })?;
        check(d.iterations.abs_diff(h.iterations) <= 1, || {
            format!("{}: iterations {} vs {}", e.name, d.iterations, h.iterations)
        })?;
        let rel = d.matvecs.abs_diff(h.matvecs) as f64 / d.matvecs.max(h.matvecs) as f64;
        check(rel <= 0.01, || format!("{}: matvecs {} vs {}", e.name, d.matvecs, h.matvecs))?;
        detail.push(format!("{}/{}", d.iterations, h.iterations));
    }
    Ok(format!("iterations dynamic/householder {}", detail.join(" ")))
}

fn prescribed_block<T: Scalar>(rows: usize, cols: usize, kappa: f64, seed: u64) -> DenseMatrix<T> {
    let mut rng = seeded_rng(seed, 77);
    let u = householder_qr(&DenseMatrix::<T>::random_normal(rows, cols, &mut rng)).unwrap().q;
    let v = householder_qr(&DenseMatrix::<T>::random_normal(cols, cols, &mut rng)).unwrap().q;
    let mut us = u;
    for j in 0..cols {
        let s = kappa.powf(-(j as f64) / (cols - 1) as f64);
        for x in us.col_mut(j) {
            *x = x.scale(s);
        }
    }
    matmul(&us, &v.adjoint()).unwrap()
}

fn qr_regimes<T: Scalar>() -> Result<String, String> {
    let (m, n) = (2000, 140);
    let sq = (n as f64).sqrt();
    let cfg = QrConfig::default();
    let mut worst2 = 0f64;
    let mut worst_s = 0f64;
    for (i, &k) in [1e2, 1e4, 1e6].iter().enumerate() {
        let x = prescribed_block::<T>(m, n, k, i as u64);
        let out = run_variant(&x, QrVariant::CholQr2, k, &cfg).map_err(|e| e.to_string())?;
        let d = out.q.orthogonality_defect();
        check(out.choice.variant == QrVariant::CholQr2, || format!("cholqr2 fell back at κ={k:e}"))?;
        check(d <= 1e-13 * sq, || format!("{}: cholqr2 at κ={k:e}: {d:e}", T::KIND))?;
        worst2 = worst2.max(d);
    }
    for (i, &k) in [1e8, 1e9, 1e10].iter().enumerate() {
        let x = prescribed_block::<T>(m, n, k, 10 + i as u64);
        let out = run_variant(&x, QrVariant::ShiftedCholQr2, k, &cfg).map_err(|e| e.to_string())?;
        let d = out.q.orthogonality_defect();
        check(out.choice.variant == QrVariant::ShiftedCholQr2, || {
            format!("shifted fell back at κ={k:e}")
        })?;
        check(d <= 1e-12 * sq, || format!("{}: shifted at κ={k:e}: {d:e}", T::KIND))?;
        worst_s = worst_s.max(d);
    }
    let x = prescribed_block::<T>(m, n, 1e9, 20);
    check(matches!(cholesky_qr(&x, 1), Err(CholQrError::Breakdown { .. })), || {
        format!("{}: cholqr1 at κ=1e9 did not break down", T::KIND)
    })?;
    let out = run_variant(&x, QrVariant::CholQr1, 1e9, &cfg).map_err(|e| e.to_string())?;
    check(out.choice.variant == QrVariant::HouseholderFallback, || {
        format!("cholqr1 breakdown took {:?}", out.choice.variant)
    })?;
    Ok(format!("{}: cholqr2 max {worst2:.1e}, shifted max {worst_s:.1e}, cholqr1 κ=1e9 falls back", T::KIND))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let a = qr_regimes::<f64>()?;
    let b = qr_regimes::<Complex64>()?;
    Ok(format!("{a}; {b}; {:.0}s", start.elapsed().as_secs_f64()))
}

fn criterion_4() -> Outcome {
    let n = 500;
    let diag: Vec<f64> = (1..=n).map(|i| i as f64).collect();
    let spec = MatrixSpec {
        n,
        spectrum: Spectrum::Explicit { values: diag.clone() },
        kind: ScalarKind::Real64,
        basis: Basis::Identity,
        seed: 0,
    };
    let (a, _) = gen_matrix::<f64>(&spec).map_err(|e| e.to_string())?;
    let config = SolverConfig::new(10, 10);
    let r = run_one(&a, &config, "diag", false).map_err(|e| e.to_string())?.result;
    check(r.converged, || "diag(1..500) did not converge".into())?;
    let err = r
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, l)| (l - (i + 1) as f64).abs())
        .fold(0.0, f64::max);
    check(r.eigenvalues.len() == 10 && err <= 1e-9, || format!("diag eigenvalue error {err:e}"))?;
    let res = r.final_residuals.iter().copied().fold(0.0, f64::max);
    check(res <= 1e-10, || format!("diag residual {res:e}"))?;
    let op = DiagonalOperator::new(diag);
    let r_op = chase_core::solver::solve::<f64, _>(&op, &config, None).map_err(|e| e.to_string())?;
    check(r_op.converged, || "diagonal operator run did not converge".into())?;

    let e = suite()
        .iter()
        .find(|e| e.name.contains("clustered-dft"))
        .ok_or("suite lacks the clustered-dft matrix")?;
    let r = &e.opt;
    check(r.converged && r.iterations <= 50, || {
        format!("clustered-dft: converged={} after {}", r.converged, r.iterations)
    })?;
    check(r.eigenvalues.len() == 100, || "clustered-dft: wrong pair count".into())?;
    let post = r.final_residuals.iter().copied().fold(0.0, f64::max);
    check(post <= r.tol, || format!("clustered-dft post-hoc residual {post:e}"))?;
    let truth_err = r
        .eigenvalues
        .iter()
        .zip(&e.truth)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    Ok(format!(
        "diag: {} iterations, max |λ−i| {err:.1e}, max residual {res:.1e}; clustered-dft n=2000: {} iterations, post-hoc max residual {post:.1e}, max |λ−λ_true| {truth_err:.1e}",
        r_op.iterations,
        r.iterations
    ))
}

fn criterion_5() -> Outcome {
    let mut rng = seeded_rng(2024, 5);
    let mut worst = 0f64;
    for draw in 0..200 {
        let n = 40;
        let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..20.0)).collect();
        d.sort_by(f64::total_cmp);
        let op = DiagonalOperator::new(d.clone());
        let interval = FilterInterval::from_edges(d[n / 3] + 1e-3, d[n - 1] + 0.5).unwrap();
        let lower = d[0] - rng.random_range(0.0..1.0);
        let m = rng.random_range(1..=36usize);
        let idx = rng.random_range(0..n);
        let p = scalar_filter_value(d[idx], &interval, lower, m).unwrap();
        let sched = DegreeSchedule::constant(m, 1);
        let got = if draw % 2 == 0 {
            let mut v = DenseMatrix::<f64>::zeros(n, 1);
            v[(idx, 0)] = 1.0;
            filter_block(&op, &v, &interval, lower, &sched).unwrap().filtered[(idx, 0)]
        } else {
            let mut v = DenseMatrix::<Complex64>::zeros(n, 1);
            v[(idx, 0)] = Complex64::new(0.6, -0.8);
            let f = filter_block(&op, &v, &interval, lower, &sched).unwrap().filtered[(idx, 0)];
            (f / Complex64::new(0.6, -0.8)).re
        };
        let rel = (got - p).abs() / p.abs().max(f64::MIN_POSITIVE);
        check(rel <= 1e-11 * m as f64, || format!("draw {draw}: m={m} rel {rel:e}"))?;
        worst = worst.max(rel / m as f64);
    }
    let unit = FilterInterval::from_edges(-1.0, 1.0).unwrap();
    let mut worst_asym = 0f64;
    for m in 0..=40usize {
        for step in 1..=90 {
            let t = 1.0 + step as f64 / 10.0;
            for s in [t, -t] {
                let rho = rho_of(s, &unit).unwrap();
                let closed = (rho.powi(m as i32) + rho.powi(-(m as i32))) / 2.0;
                let reference = (m as f64 * t.acosh()).cosh();
                let sign = if s < 0.0 && m % 2 == 1 { -1.0 } else { 1.0 };
                let c = cheb_scalar(m, s);
                for (what, got) in [("recurrence", c * sign), ("closed form", closed)] {
                    let rel = (got - reference).abs() / reference;
                    check(rel <= 1e-10, || format!("{what}: m={m}, t={s}: rel {rel:e}"))?;
                    worst_asym = worst_asym.max(rel);
                }
            }
        }
    }
    Ok(format!(
        "200 draws, max rel/m {worst:.1e}; Chebyshev m≤40, |t|∈(1,10]: max rel {worst_asym:.1e}"
    ))
}

fn criterion_6() -> Outcome {
    let cfg = QrConfig::default();
    for (est, want) in [
        (1e9, QrVariant::ShiftedCholQr2),
        (10.0, QrVariant::CholQr1),
        (1e5, QrVariant::CholQr2),
    ] {
        let got = select_variant(est, &cfg);
        check(got == want, || format!("est {est:e} → {got:?}, want {want:?}"))?;
    }
    let mut cholqr1_rows = 0;
    for e in suite() {
        for (label, r) in [("opt", &e.opt), ("noopt", &e.noopt)] {
            for t in &r.traces {
                if t.qr.variant == QrVariant::CholQr1 {
                    cholqr1_rows += 1;
                    check(t.cond_est < cfg.cholqr1_threshold, || {
                        format!("{} {label} iter {}: cholqr1 at est {:e}", e.name, t.iter, t.cond_est)
                    })?;
                }
                let chosen = select_variant(t.cond_est, &cfg);
                check(t.qr.variant == chosen || t.qr.variant == QrVariant::HouseholderFallback, || {
                    format!("{} {label} iter {}: {:?} for est {:e}", e.name, t.iter, t.qr.variant, t.cond_est)
                })?;
                let bound = 1e-12 * (e.ell as f64).sqrt();
                check(t.orthogonality <= bound, || {
                    format!("{} {label} iter {}: post-QR orthogonality {:e}", e.name, t.iter, t.orthogonality)
                })?;
            }
        }
    }
    let seq: Vec<&str> = suite()[4].opt.traces.iter().map(|t| t.qr.variant.name()).collect();
    Ok(format!(
        "thresholds pinned; {cholqr1_rows} cholqr1 rows all below 20; n=2000 opt sequence {}",
        seq.join(">")
    ))
}

fn criterion_7() -> Outcome {
    let mut rng = seeded_rng(7, 7);
    for case in 0..500 {
        let lo = rng.random_range(-10.0..10.0);
        let interval = FilterInterval::from_edges(lo, lo + rng.random_range(0.5..50.0)).unwrap();
        let lambda1 = lo - rng.random_range(1e-6..20.0);
        let len = rng.random_range(1..40usize);
        let mut degs: Vec<usize> = (0..len).map(|_| rng.random_range(3..=36usize)).collect();
        degs.sort();
        let sched = DegreeSchedule::new(degs, 36).unwrap();
        let mode = if case % 2 == 0 {
            EtaMode::One
        } else {
            EtaMode::Formula {
                lambda_ell_est: lo - rng.random_range(1e-3..5.0),
            }
        };
        let ritz: Vec<f64> = (0..len).map(|i| lambda1 + i as f64 * 1e-3).collect();
        let locked = estimate_locked(&interval, &ritz, &sched, 0, lambda1, mode).unwrap();
        let optimized = estimate_optimized(&interval, lambda1, &sched, mode).unwrap();
        check(locked == optimized && locked.bound.to_bits() == optimized.bound.to_bits(), || {
            format!("case {case}: locked(0) differs from optimized")
        })?;
        let m = sched.last().unwrap();
        let constant = DegreeSchedule::constant(m, len);
        let opt_c = estimate_optimized(&interval, lambda1, &constant, mode).unwrap();
        let uni = estimate_uniform(&interval, lambda1, m, mode).unwrap();
        check(opt_c == uni && opt_c.bound.to_bits() == uni.bound.to_bits(), || {
            format!("case {case}: optimized(constant) differs from uniform")
        })?;
    }
    let x = 1.0 + 2f64.sqrt();
    let direct = eta_from_power(x);
    check((direct - 1.0).abs() <= 1e-12, || format!("η(1+√2) = {direct}"))?;
    let interval = FilterInterval::from_edges(2.0, 6.0).unwrap();
    let lambda_ell = interval.center - 2f64.sqrt() * interval.half_width;
    let eta = eta_factor(&interval, 1, EtaMode::Formula { lambda_ell_est: lambda_ell });
    check(!eta.capped && (eta.value - 1.0).abs() <= 1e-12, || {
        format!("η via interval = {} (capped {})", eta.value, eta.capped)
    })?;
    Ok(format!(
        "500 random cases bitwise identical; η(ρ^m = 1+√2) = 1 {:+.1e}",
        eta.value - 1.0
    ))
}

fn cli(args: &[&str], out: &Path) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_chase"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    check(o.status.success(), || {
        format!("{args:?} exited {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr))
    })
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runs: [(&[&str], &[&str]); 3] = [
        (
            &["cond-trace", "--both", "--n", "500", "--complex", "--spectrum", "clustered", "--nev", "20", "--nex", "10", "--seed", "5"],
            &["trace_opt.csv", "trace_noopt.csv"],
        ),
        (
            &["compare-qr", "--n", "600", "--nev", "20", "--nex", "10", "--seed", "9"],
            &["trace_dynamic.csv", "trace_householder.csv"],
        ),
        (
            &["solve", "--n", "400", "--spectrum", "clustered", "--eta", "formula", "--seed", "3"],
            &["trace.csv", "eigenvalues.csv"],
        ),
    ];
    let mut bytes = 0;
    for (i, (args, files)) in runs.iter().enumerate() {
        let a = dir.path().join(format!("{i}a"));
        let b = dir.path().join(format!("{i}b"));
        cli(args, &a)?;
        cli(args, &b)?;
        for f in *files {
            let x = std::fs::read(a.join(f)).map_err(|e| e.to_string())?;
            let y = std::fs::read(b.join(f)).map_err(|e| e.to_string())?;
            check(!x.is_empty() && x == y, || format!("{}: {f} differs", args[0]))?;
            bytes += x.len();
        }
    }
    Ok(format!("3 subcommands x 2 invocations, {bytes} bytes compared, identical"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("bound dominance", criterion_1),
        ("cross-mode equivalence", criterion_2),
        ("QR regime guarantees", criterion_3),
        ("solver correctness", criterion_4),
        ("filter fidelity", criterion_5),
        ("dynamic selection thresholds", criterion_6),
        ("estimator algebra", criterion_7),
        ("determinism", criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
