use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use chase_core::dense::DenseMatrix;
use chase_core::qr::QrVariant;
use chase_core::solver::{EtaChoice, QrMode, SolverConfig};
use chase_core::{Scalar, ScalarKind};
use chase_harness::experiments::{self, RunRecord};
use chase_harness::matgen::{Basis, MatrixSpec, Spectrum};
use chase_harness::mm::{read_matrix_market, write_matrix_market, Symmetry};
use chase_harness::trace::{fmt_f64, write_trace_csv, ConfigReport, Summary};
use chase_harness::{AnyMatrix, HarnessError};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

const EXIT_VIOLATION: u8 = 2;
const EXIT_PARSE: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Parser)]
#[command(name = "chase", version, about = "Chebyshev-filtered subspace iteration experiments")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    matrix: MatrixArgs,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a synthetic matrix and its spectrum.
    Gen,
    /// Solve once and write the trace, eigenvalues and summary.
    Solve,
    /// Record estimated and exact condition numbers per iteration.
    CondTrace {
        /// Run both degree modes instead of the one picked by --no-opt.
        #[arg(long)]
        both: bool,
        /// Skip the exact SVD oracle.
        #[arg(long)]
        no_exact: bool,
    },
    /// Dynamic QR against Householder-only on the same problem.
    CompareQr {
        /// Also run the exact SVD oracle on the dynamic run.
        #[arg(long)]
        exact: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum QrArg {
    Dynamic,
    Hh,
    Cholqr1,
    Cholqr2,
    Shifted,
}

#[derive(Clone, Copy, ValueEnum)]
enum EtaArg {
    One,
    Formula,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpectrumArg {
    Uniform,
    Clustered,
    Explicit,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisArg {
    Random,
    Identity,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 10)]
    nev: usize,
    #[arg(long, global = true, default_value_t = 10)]
    nex: usize,
    #[arg(long, global = true, default_value_t = 20)]
    deg_base: usize,
    #[arg(long, global = true, default_value_t = 36)]
    deg_max: usize,
    #[arg(long, global = true)]
    no_opt: bool,
    #[arg(long, global = true, value_enum, default_value_t = QrArg::Dynamic)]
    qr: QrArg,
    #[arg(long, global = true, value_enum, default_value_t = EtaArg::One)]
    eta: EtaArg,
    #[arg(long, global = true, default_value_t = 50)]
    max_iter: usize,
    #[arg(long, global = true, default_value_t = 25)]
    lanczos_steps: usize,
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct MatrixArgs {
    /// Matrix Market input; overrides the synthetic generator.
    #[arg(long, global = true)]
    matrix: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 500)]
    n: usize,
    #[arg(long, global = true, value_enum, default_value_t = SpectrumArg::Uniform)]
    spectrum: SpectrumArg,
    /// Defaults: 1 (uniform) or −10 (clustered).
    #[arg(long, global = true, allow_negative_numbers = true)]
    lo: Option<f64>,
    /// Defaults: n (uniform) or 90 (clustered).
    #[arg(long, global = true, allow_negative_numbers = true)]
    hi: Option<f64>,
    #[arg(long, global = true, default_value_t = 0.1)]
    cluster_frac: f64,
    /// Comma-separated eigenvalues for `--spectrum explicit`.
    #[arg(long, global = true, allow_negative_numbers = true)]
    values: Option<String>,
    #[arg(long, global = true)]
    complex: bool,
    #[arg(long, global = true, value_enum, default_value_t = BasisArg::Random)]
    basis: BasisArg,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        let mut c = SolverConfig::new(self.nev, self.nex);
        c.tol = self.tol;
        c.base_degree = self.deg_base;
        c.max_degree = self.deg_max;
        c.degree_opt = !self.no_opt;
        c.eta = match self.eta {
            EtaArg::One => EtaChoice::One,
            EtaArg::Formula => EtaChoice::Formula,
        };
        c.qr_mode = match self.qr {
            QrArg::Dynamic => QrMode::Dynamic,
            QrArg::Hh => QrMode::HouseholderOnly,
            QrArg::Cholqr1 => QrMode::Forced(QrVariant::CholQr1),
            QrArg::Cholqr2 => QrMode::Forced(QrVariant::CholQr2),
            QrArg::Shifted => QrMode::Forced(QrVariant::ShiftedCholQr2),
        };
        c.max_iterations = self.max_iter;
        c.seed = self.seed;
        c.lanczos_steps = self.lanczos_steps;
        c
    }
}

impl MatrixArgs {
    fn spec(&self, seed: u64) -> anyhow::Result<MatrixSpec> {
        let spectrum = match self.spectrum {
            SpectrumArg::Uniform => Spectrum::Uniform {
                lo: self.lo.unwrap_or(1.0),
                hi: self.hi.unwrap_or(self.n as f64),
            },
            SpectrumArg::Clustered => Spectrum::ClusteredDft {
                lo: self.lo.unwrap_or(-10.0),
                hi: self.hi.unwrap_or(90.0),
                cluster_frac: self.cluster_frac,
            },
            SpectrumArg::Explicit => {
                let raw = self
                    .values
                    .as_deref()
                    .context("--spectrum explicit needs --values")?;
                let values = raw
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .context("--values must be comma-separated numbers")?;
                Spectrum::Explicit { values }
            }
        };
        Ok(MatrixSpec {
            n: self.n,
            spectrum,
            kind: if self.complex {
                ScalarKind::Complex128
            } else {
                ScalarKind::Real64
            },
            basis: match self.basis {
                BasisArg::Random => Basis::Random,
                BasisArg::Identity => Basis::Identity,
            },
            seed,
        })
    }
}

struct Problem {
    matrix: AnyMatrix,
    spectrum: Option<Vec<f64>>,
    description: serde_json::Value,
}

fn load(cli: &Cli) -> anyhow::Result<Problem> {
    if let Some(path) = &cli.matrix.matrix {
        let read = read_matrix_market(path)?;
        if let Some(w) = &read.warning {
            eprintln!("warning: {}: {w}", path.display());
        }
        let (r, c) = read.matrix.shape();
        anyhow::ensure!(r == c, "{} is {r}×{c}, not square", path.display());
        return Ok(Problem {
            matrix: read.matrix,
            spectrum: None,
            description: json!({ "file": path.display().to_string() }),
        });
    }
    let spec = cli.matrix.spec(cli.solver.seed)?;
    let (matrix, spectrum) = experiments::generate(&spec)?;
    Ok(Problem {
        matrix,
        spectrum: Some(spectrum),
        description: serde_json::to_value(&spec)?,
    })
}

fn write_trace<T>(dir: &Path, name: &str, run: &RunRecord<T>) -> anyhow::Result<()> {
    let path = dir.join(name);
    let f = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_trace_csv(std::io::BufWriter::new(f), &run.result.traces)?;
    Ok(())
}

fn write_summary(
    dir: &Path,
    description: &serde_json::Value,
    config: &SolverConfig,
    runs: &[&dyn ModeRow],
    comparison: Option<serde_json::Value>,
) -> anyhow::Result<()> {
    let per_mode: BTreeMap<_, _> = runs.iter().map(|r| (r.label(), r.row())).collect();
    let summary = Summary {
        matrix: description.clone(),
        config: ConfigReport::from(config),
        per_mode,
    };
    let mut value = serde_json::to_value(&summary)?;
    if let Some(c) = comparison {
        value["comparison"] = c;
    }
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&value)? + "\n")?;
    Ok(())
}

trait ModeRow {
    fn label(&self) -> String;
    fn row(&self) -> chase_harness::trace::ModeSummary;
}

impl<T> ModeRow for RunRecord<T> {
    fn label(&self) -> String {
        self.label.clone()
    }
    fn row(&self) -> chase_harness::trace::ModeSummary {
        self.summary()
    }
}

fn report<T>(run: &RunRecord<T>) {
    let r = &run.result;
    println!(
        "{}: converged={} iterations={} matvecs={} wall_s={:.3} qr_s={:.3}",
        run.label,
        r.converged,
        r.iterations,
        r.matvecs,
        run.wall_s,
        run.qr_seconds()
    );
}

fn execute<T: Scalar>(cli: &Cli, a: &DenseMatrix<T>, problem: &Problem) -> anyhow::Result<u8> {
    let config = cli.solver.config();
    let out = &cli.solver.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    match &cli.cmd {
        Cmd::Gen => {
            let f = fs::File::create(out.join("matrix.mtx"))?;
            write_matrix_market(std::io::BufWriter::new(f), a, Symmetry::Hermitian)?;
            if let Some(s) = &problem.spectrum {
                let text: String = s.iter().map(|x| fmt_f64(*x) + "\n").collect();
                fs::write(out.join("spectrum.txt"), text)?;
            }
            println!("wrote {}", out.join("matrix.mtx").display());
            Ok(0)
        }
        Cmd::Solve => {
            let run = experiments::run_one(a, &config, "solve", false)?;
            write_trace(out, "trace.csv", &run)?;
            let mut eig = String::from("index,eigenvalue,residual\n");
            for (i, (l, r)) in run
                .result
                .eigenvalues
                .iter()
                .zip(&run.result.final_residuals)
                .enumerate()
            {
                eig.push_str(&format!("{i},{},{}\n", fmt_f64(*l), fmt_f64(*r)));
            }
            fs::write(out.join("eigenvalues.csv"), eig)?;
            write_summary(out, &problem.description, &config, &[&run], None)?;
            report(&run);
            Ok(if run.result.converged { 0 } else { EXIT_NOT_CONVERGED })
        }
        Cmd::CondTrace { both, no_exact } => {
            let modes: Vec<bool> = if *both {
                vec![false, true]
            } else {
                vec![config.degree_opt]
            };
            let runs = experiments::run_cond_trace(a, &config, &modes, !no_exact)?;
            let mut violated = false;
            for run in &runs {
                write_trace(out, &format!("trace_{}.csv", run.label), run)?;
                report(run);
                if !run.violations.is_empty() {
                    violated = true;
                    eprintln!("{}: estimate below exact at iterations {:?}", run.label, run.violations);
                }
            }
            let rows: Vec<&dyn ModeRow> = runs.iter().map(|r| r as &dyn ModeRow).collect();
            write_summary(out, &problem.description, &config, &rows, None)?;
            Ok(if violated {
                EXIT_VIOLATION
            } else if runs.iter().any(|r| !r.result.converged) {
                EXIT_NOT_CONVERGED
            } else {
                0
            })
        }
        Cmd::CompareQr { exact } => {
            let rep = experiments::run_compare_qr(a, &config, *exact)?;
            write_trace(out, "trace_dynamic.csv", &rep.dynamic)?;
            write_trace(out, "trace_householder.csv", &rep.householder)?;
            report(&rep.dynamic);
            report(&rep.householder);
            let comparison = json!({
                "max_eig_diff": rep.max_eig_diff,
                "norm_est": rep.norm_est,
                "eigenvalues_agree": rep.eigenvalues_agree(),
                "iteration_delta": rep.iteration_delta,
                "matvec_rel_diff": rep.matvec_rel_diff,
                "cholqr1_only_below_threshold":
                    rep.dynamic.cholqr1_only_below(experiments::cholqr1_threshold()),
                "qr_time_ratio": rep.householder.qr_seconds() / rep.dynamic.qr_seconds().max(1e-12),
            });
            println!("{comparison}");
            write_summary(
                out,
                &problem.description,
                &config,
                &[&rep.dynamic, &rep.householder],
                Some(comparison),
            )?;
            Ok(if !rep.eigenvalues_agree() || !rep.dynamic.violations.is_empty() {
                EXIT_VIOLATION
            } else if !rep.dynamic.result.converged || !rep.householder.result.converged {
                EXIT_NOT_CONVERGED
            } else {
                0
            })
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<u8> {
    let problem = load(cli)?;
    match &problem.matrix {
        AnyMatrix::Real(a) => execute(cli, a, &problem),
        AnyMatrix::Complex(a) => execute(cli, a, &problem),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARSE } else { 0 });
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let parse = matches!(e.downcast_ref::<HarnessError>(), Some(HarnessError::Parse { .. }));
            ExitCode::from(if parse { EXIT_PARSE } else { 1 })
        }
    }
}
