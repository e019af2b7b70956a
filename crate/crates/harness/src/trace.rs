//! CSV traces and the JSON run summary.

use std::collections::BTreeMap;
use std::io::Write;

use chase_core::solver::{IterationTrace, QrMode, SolverConfig};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Result;

pub const HEADER: [&str; 11] = [
    "iter",
    "locked",
    "deg_min",
    "deg_max",
    "cond_est",
    "cond_exact",
    "qr_variant",
    "shift",
    "res_max",
    "res_min",
    "matvecs",
];

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn trace_record(t: &IterationTrace) -> [String; 11] {
    [
        t.iter.to_string(),
        t.locked.to_string(),
        t.deg_min.to_string(),
        t.deg_max.to_string(),
        fmt_f64(t.cond_est),
        opt(t.cond_exact),
        t.qr.variant.name().to_string(),
        opt(t.qr.shift_applied),
        opt(t.res_max),
        opt(t.res_min),
        t.matvecs_cumulative.to_string(),
    ]
}

/// Header plus one row per trace, LF-terminated.
pub fn write_trace_csv<W: Write>(w: W, traces: &[IterationTrace]) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(HEADER)?;
    for t in traces {
        out.write_record(trace_record(t))?;
    }
    out.flush()?;
    Ok(())
}

pub fn trace_csv_string(traces: &[IterationTrace]) -> Result<String> {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, traces)?;
    Ok(String::from_utf8(buf).expect("csv output is ASCII"))
}

/// SHA-256 over the little-endian bit patterns, hex encoded.
pub fn eigenvalues_hash(values: &[f64]) -> String {
    let mut h = Sha256::new();
    for v in values {
        h.update(v.to_bits().to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeSummary {
    pub iterations: usize,
    pub matvecs: usize,
    pub wall_s: f64,
    pub qr_s: f64,
    pub eigenvalues_hash: String,
    pub converged: bool,
    pub qr_variants: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigReport {
    pub nev: usize,
    pub nex: usize,
    pub tol: f64,
    pub base_degree: usize,
    pub max_degree: usize,
    pub degree_opt: bool,
    pub eta: String,
    pub qr_mode: String,
    pub max_iterations: usize,
    pub seed: u64,
    pub lanczos_steps: usize,
}

impl From<&SolverConfig> for ConfigReport {
    fn from(c: &SolverConfig) -> Self {
        Self {
            nev: c.nev,
            nex: c.nex,
            tol: c.tol,
            base_degree: c.base_degree,
            max_degree: c.max_degree,
            degree_opt: c.degree_opt,
            eta: format!("{:?}", c.eta).to_lowercase(),
            qr_mode: match c.qr_mode {
                QrMode::Dynamic => "dynamic".into(),
                QrMode::HouseholderOnly => "householder_only".into(),
                QrMode::Forced(v) => v.name().into(),
            },
            max_iterations: c.max_iterations,
            seed: c.seed,
            lanczos_steps: c.lanczos_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub matrix: serde_json::Value,
    pub config: ConfigReport,
    pub per_mode: BTreeMap<String, ModeSummary>,
}
