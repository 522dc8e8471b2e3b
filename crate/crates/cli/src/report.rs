//! The JSON run report and its text rendering.

use std::fmt::Write;

use bectomo::spin_tomo::{ConditionReport, Corrections};
use bectomo::HalfInt;
use serde::{Deserialize, Serialize};

use crate::pipeline::{Check, NamedGrid};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub name: String,
    pub kind: String,
    pub min: f64,
    pub max: f64,
    pub normalization: f64,
    pub imag_residue: f64,
}

impl GridSummary {
    pub fn of(g: &NamedGrid, j: HalfInt) -> Self {
        GridSummary {
            name: g.name.to_string(),
            kind: g.grid.kind.name().to_string(),
            min: g.grid.min(),
            max: g.grid.max(),
            normalization: g.grid.normalization(j),
            imag_residue: g.grid.imag_residue,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub status: String,
    pub seed: u64,
    pub acquisition_seed: u64,
    pub exact: bool,
    pub plan: String,
    pub parameters: serde_json::Value,
    pub fidelity: f64,
    pub max_abs_error: f64,
    pub n1: Option<usize>,
    pub corrections: Corrections,
    pub condition_numbers: Vec<f64>,
    pub identity_residual: Option<f64>,
    pub grid_check: Option<ConditionReport>,
    pub quasiprob: Vec<GridSummary>,
    pub checks: Vec<Check>,
    pub wall_time_s: f64,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.3e}"))
}

/// Renders the report as plain-text tables.
pub fn render(r: &RunReport) -> String {
    let mut s = String::new();
    let runs = r.parameters.pointer("/measurement/runs").and_then(|v| v.as_u64());
    let noise = r.parameters.pointer("/measurement/noise").and_then(|v| v.as_str()).unwrap_or("-");
    let stats = match runs {
        Some(n) if !r.exact => format!("{n} events per setting, {noise} noise"),
        _ => "exact probabilities".into(),
    };
    let _ = writeln!(s, "scenario      {}", r.scenario);
    let _ = writeln!(s, "status        {}", r.status);
    let _ = writeln!(s, "seed          {} (acquisition stream {:#018x})", r.seed, r.acquisition_seed);
    let _ = writeln!(s, "plan          {}", r.plan);
    let _ = writeln!(s, "statistics    {stats}");
    if let Some(n1) = r.n1 {
        let _ = writeln!(s, "truncation    N1 = {n1}");
    }
    let _ = writeln!(s, "fidelity      {:.6}", r.fidelity);
    let _ = writeln!(s, "max |error|   {:.3e}", r.max_abs_error);
    let _ = writeln!(s, "wall time     {:.2} s", r.wall_time_s);

    let c = &r.corrections;
    let _ = writeln!(s, "\ncorrections");
    let _ = writeln!(s, "  hermitian defect   {:.3e}", c.hermitian_defect);
    let _ = writeln!(s, "  trace before       {:.6} {:+.3e}i", c.trace_before_re, c.trace_before_im);
    let _ = writeln!(s, "  clipped weight     {}", fmt_opt(c.clipped_weight));

    if !r.condition_numbers.is_empty() {
        let _ = writeln!(s, "\ndesign condition numbers");
        let _ = writeln!(s, "  {:>3}  {:>12}", "s", "cond");
        for (i, k) in r.condition_numbers.iter().enumerate() {
            let _ = writeln!(s, "  {i:>3}  {k:>12.4e}");
        }
        let _ = writeln!(s, "  identity residual  {}", fmt_opt(r.identity_residual));
    }
    if let Some(g) = &r.grid_check {
        let _ = writeln!(
            s,
            "\nquadrature self-check: {} x {} nodes, round-trip error {:.3e}",
            g.n_theta, g.k_phi, g.worst_error
        );
    }
    if !r.quasiprob.is_empty() {
        let _ = writeln!(s, "\nquasiprobability grids");
        let _ = writeln!(s, "  {:<24} {:>11} {:>11} {:>9}", "grid", "min", "max", "norm");
        for g in &r.quasiprob {
            let _ = writeln!(s, "  {:<24} {:>11.4e} {:>11.4e} {:>9.5}", g.name, g.min, g.max, g.normalization);
        }
    }
    if !r.checks.is_empty() {
        let _ = writeln!(s, "\nchecks");
        for ch in &r.checks {
            let verdict = if ch.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(s, "  {:<32} {verdict}  {}", ch.name, ch.detail);
        }
    }
    s
}
