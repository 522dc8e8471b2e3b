//! Batch runner for atom-counting tomography scenarios.
//!
//! Every command returns the text it prints, so the binary stays a thin
//! shell around these functions.

pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod rundir;
pub mod seeds;

use std::fmt::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use bectomo::io::{write_density, write_grid_matrix, write_phase_scan, write_spin_marginals, write_tradeoff};
use bectomo::states::Basis;
use bectomo::HalfInt;

pub use config::{Overrides, RunConfig};
pub use error::CliError;
pub use report::RunReport;

use pipeline::{Data, NamedGrid, Simulation};
use report::GridSummary;
use rundir::{RunDir, Status};

pub const REPORT_FILE: &str = "report.json";

/// Where a command takes its configuration from.
#[derive(Clone, Debug, Default)]
pub struct Source {
    pub config: Option<PathBuf>,
    pub scenario: Option<String>,
}

impl Source {
    pub fn load(&self, overrides: &Overrides) -> Result<RunConfig, CliError> {
        let mut cfg = match (&self.config, &self.scenario) {
            (Some(path), None) => RunConfig::load(path)?,
            (None, Some(name)) => RunConfig::preset(name)?,
            (Some(_), Some(_)) => {
                return Err(CliError::Config(vec!["give either --config or --scenario, not both".into()]))
            }
            (None, None) => return Err(CliError::Config(vec!["one of --config or --scenario is required".into()])),
        };
        cfg.apply(overrides);
        Ok(cfg)
    }
}

/// Runs the full pipeline and writes the run directory.
pub fn run(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let plan = cfg.validate()?;
    let started = Instant::now();
    let mut dir = RunDir::create(&cfg.output_dir())?;
    let mut stage = "setup";
    let result = run_stages(cfg, &plan, &mut dir, &mut stage, started);
    let status = match &result {
        Ok(_) => Status::Complete,
        Err(CliError::Numerical { stage, .. }) => Status::Incomplete { stage: stage.to_string() },
        Err(_) => Status::Incomplete { stage: stage.to_string() },
    };
    dir.finish(&status)?;
    result
}

fn run_stages(
    cfg: &RunConfig,
    plan: &config::Plan,
    dir: &mut RunDir,
    stage: &mut &'static str,
    started: Instant,
) -> Result<RunReport, CliError> {
    dir.write("config.toml", cfg.to_toml().as_bytes())?;

    *stage = "state";
    let truth = pipeline::true_state(cfg, plan)?;
    dir.write_with("state_true.csv", |b| write_density(&truth, b))?;

    *stage = "simulate";
    let (data, acquisition_seed) = pipeline::acquire(cfg, plan, &truth, cfg.measurement.seed)?;
    match &data {
        Data::Spin(d) => dir.write_with("spin_marginals.csv", |b| write_spin_marginals(d, b))?,
        Data::Phase(d) => dir.write_with("phase_scan.csv", |b| write_phase_scan(d, b))?,
    }

    *stage = "reconstruct";
    let estimate = pipeline::reconstruct(cfg, plan, &data)?;
    let sim = pipeline::assemble(truth, data, estimate, acquisition_seed)?;
    dir.write_with("density_reconstructed.csv", |b| write_density(&sim.estimate.rho, b))?;

    *stage = "quasiprob";
    let grids = pipeline::quasiprob_grids(cfg, &sim)?;
    for g in &grids {
        dir.write_with(&format!("{}.csv", g.name), |b| write_grid_matrix(&g.grid, b))?;
    }

    *stage = "fidelity";
    let fidelity = sim.fidelity()?;
    let checks = pipeline::checks(cfg, &sim, &grids)?;

    *stage = "report";
    let report = build_report(cfg, plan, &sim, &grids, fidelity, checks, started.elapsed().as_secs_f64());
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    dir.write(REPORT_FILE, json.as_bytes())?;
    Ok(report)
}

fn build_report(
    cfg: &RunConfig,
    plan: &config::Plan,
    sim: &Simulation,
    grids: &[NamedGrid],
    fidelity: f64,
    checks: Vec<pipeline::Check>,
    wall_time_s: f64,
) -> RunReport {
    let j = match sim.estimate.rho.basis {
        Basis::Spin { j } => j,
        Basis::Fock { .. } => HalfInt::ZERO,
    };
    let design = sim.estimate.design.as_ref();
    RunReport {
        scenario: cfg.scenario.clone(),
        status: "complete".into(),
        seed: cfg.measurement.seed,
        acquisition_seed: sim.acquisition_seed,
        exact: cfg.measurement.runs.is_none(),
        plan: plan.scheme.to_string(),
        parameters: serde_json::to_value(cfg).expect("configuration serializes"),
        fidelity,
        max_abs_error: sim.max_abs_error(),
        n1: sim.n1(),
        corrections: sim.estimate.corrections.clone(),
        condition_numbers: design.map(|d| d.conditions()).unwrap_or_default(),
        identity_residual: design.map(|d| d.identity_residual()),
        grid_check: sim.estimate.grid_check.clone(),
        quasiprob: grids.iter().map(|g| GridSummary::of(g, j)).collect(),
        checks,
        wall_time_s,
    }
}

/// Checks a configuration without computing anything.
pub fn validate(cfg: &RunConfig) -> Result<String, CliError> {
    let plan = cfg.validate()?;
    Ok(format!("{}: ok\n  {}\n  output directory {}\n", cfg.scenario, plan.scheme, cfg.output_dir().display()))
}

pub fn read_report(dir: &Path) -> Result<RunReport, CliError> {
    let path = dir.join(REPORT_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Renders the report of a finished run, noting any artifact whose hash no
/// longer matches the MANIFEST.
pub fn report(dir: &Path) -> Result<String, CliError> {
    let mut text = report::render(&read_report(dir)?);
    let (status, _) = rundir::read_manifest(dir)?;
    let bad = rundir::verify_manifest(dir)?;
    let _ = writeln!(text, "\nmanifest      {status}");
    if bad.is_empty() {
        let _ = writeln!(text, "artifacts     all hashes match");
    } else {
        let _ = writeln!(text, "artifacts     modified or missing: {}", bad.join(", "));
    }
    Ok(text)
}

/// Per-band singular values and condition numbers of the design matrices.
pub fn design_report(cfg: &RunConfig) -> Result<String, CliError> {
    let plan = cfg.validate()?;
    let design = pipeline::design(&plan)?;
    let mut csv = String::from("s,rows,cols,singular_max,singular_min,condition\n");
    let mut text = format!(
        "design matrices for |beta| = {}, eta = {}, N1 = {}, N_count = {} (internal {})\n",
        design.beta_abs, design.eta, design.n1, design.n_count, design.n_internal
    );
    let _ = writeln!(
        text,
        "  {:>3} {:>5} {:>5} {:>12} {:>12} {:>12}",
        "s", "rows", "cols", "sigma_max", "sigma_min", "cond"
    );
    for b in &design.blocks {
        let (rows, cols) = b.a.shape();
        let _ = writeln!(
            text,
            "  {:>3} {rows:>5} {cols:>5} {:>12.4e} {:>12.4e} {:>12.4e}",
            b.s,
            b.singular_max,
            b.singular_min,
            b.condition()
        );
        let _ = writeln!(csv, "{},{rows},{cols},{},{},{}", b.s, b.singular_max, b.singular_min, b.condition());
    }
    let _ = writeln!(text, "  identity residual {:.3e}", design.identity_residual());
    if cfg.output.dir.is_some() {
        let mut dir = RunDir::create(&cfg.output_dir())?;
        dir.write("design_report.csv", csv.as_bytes())?;
        dir.finish(&Status::Complete)?;
        let _ = writeln!(text, "  written to {}", dir.path().join("design_report.csv").display());
    }
    Ok(text)
}

/// Monte Carlo standard errors versus `|beta|`, written as long-format CSV.
pub fn beta_tradeoff(cfg: &RunConfig) -> Result<String, CliError> {
    let plan = cfg.validate()?;
    let rep = pipeline::tradeoff(cfg, &plan, cfg.measurement.seed)?;
    let n1 = rep.entries.iter().map(|e| e.row).max().unwrap_or(0);
    let mut text = format!("standard errors over {} seeds\n", rep.seeds.len());
    let _ = writeln!(text, "  {:>6} {:>12} {:>14} {:>12}", "|beta|", "diagonal", "(N1, 0) elem", "cond A0");
    for &(beta, cond) in &rep.condition_a0 {
        let far = rep.element(beta, n1, 0).unwrap_or(f64::NAN);
        let _ = writeln!(text, "  {beta:>6} {:>12.4e} {far:>14.4e} {cond:>12.4e}", rep.mean_diagonal(beta));
    }
    let mut dir = RunDir::create(&cfg.output_dir())?;
    dir.write_with("tradeoff.csv", |b| write_tradeoff(&rep, b))?;
    dir.finish(&Status::Complete)?;
    let _ = writeln!(text, "  written to {}", dir.path().join("tradeoff.csv").display());
    Ok(text)
}
