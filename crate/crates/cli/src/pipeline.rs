//! State construction, simulation, reconstruction and scoring, without any
//! file output.

use bectomo::dn_tomo::{
    beta_tradeoff_report, build_design, reconstruct_fock, select_truncation, standard_errors, DesignMatrixFamily,
    FockReconOptions, ScanPlan, TradeoffReport,
};
use bectomo::forward::{scan_phase, scan_spin, Acquisition, PhaseScanSet, Runs, SpinMarginalSet};
use bectomo::quasiprob::{fidelity, q_plane, q_sphere, wigner_plane, PlaneGrid, QuasiprobGrid, SphereGrid};
use bectomo::scalar::{max_abs_diff, CMatrix};
use bectomo::spin_tomo::{reconstruct_spin, ConditionReport, Corrections, QuadratureGrid, SpinReconOptions};
use bectomo::states::{
    fock_state, squeezed_coefficients, squeezed_state_auto, two_mode_spin_squeezed, Basis, DensityMatrix,
};
use serde::{Deserialize, Serialize};

use crate::config::{Plan, RunConfig, SchemePlan, StateKind};
use crate::error::CliError;
use crate::seeds;

/// Negative values of the emitted Wigner grid tolerated by the positivity
/// check.
pub const POSITIVITY_TOLERANCE: f64 = 1e-9;
/// Allowed size of phase-diffused estimates in units of their standard error.
pub const DIFFUSION_SIGMAS: f64 = 5.0;

/// The state to be measured, in the basis the simulator uses.
pub fn true_state(cfg: &RunConfig, plan: &Plan) -> Result<DensityMatrix<f64>, CliError> {
    let s = &cfg.state;
    let stage = CliError::at("state");
    let rho = match s.kind {
        StateKind::Squeezed => {
            let (x0, r) = (s.x0.unwrap_or_default(), s.r.unwrap_or_default());
            match s.n_trunc {
                Some(n) => squeezed_coefficients(x0, r, n),
                None => squeezed_state_auto(x0, r),
            }
            .map_err(stage)?
            .density()
        }
        StateKind::Fock => {
            let n = s.n.unwrap_or_default();
            let n1 = match plan.scheme {
                SchemePlan::DisplacedNumber { n1, .. } => n1.unwrap_or(0),
                SchemePlan::Spin { .. } => 0,
            };
            fock_state(n, s.n_trunc.unwrap_or(n.max(n1))).map_err(stage)?.density()
        }
        StateKind::TwoModeSqueezed => {
            two_mode_spin_squeezed(s.x0.unwrap_or_default(), s.r.unwrap_or_default(), s.atoms.unwrap_or_default())
                .map_err(stage)?
                .density()
        }
    };
    Ok(rho)
}

/// Simulated measurement record.
#[derive(Clone, Debug)]
pub enum Data {
    Spin(SpinMarginalSet<f64>),
    Phase(PhaseScanSet<f64>),
}

/// Reconstruction together with its diagnostics.
#[derive(Clone, Debug)]
pub struct Estimate {
    pub rho: DensityMatrix<f64>,
    /// Linear estimate before conditioning (Case II only).
    pub raw: Option<CMatrix<f64>>,
    pub corrections: Corrections,
    pub design: Option<DesignMatrixFamily<f64>>,
    pub grid_check: Option<ConditionReport>,
}

/// One simulated experiment and its reconstruction.
#[derive(Clone, Debug)]
pub struct Simulation {
    /// The state as constructed.
    pub truth_full: DensityMatrix<f64>,
    /// The state restricted to the basis of the estimate.
    pub truth: DensityMatrix<f64>,
    pub data: Data,
    pub estimate: Estimate,
    pub acquisition_seed: u64,
}

impl Simulation {
    pub fn fidelity(&self) -> Result<f64, CliError> {
        fidelity(&self.truth, &self.estimate.rho).map_err(CliError::at("fidelity"))
    }

    pub fn max_abs_error(&self) -> f64 {
        max_abs_diff(&self.truth.entries, &self.estimate.rho.entries)
    }

    pub fn n1(&self) -> Option<usize> {
        match self.estimate.rho.basis {
            Basis::Fock { n_trunc } => Some(n_trunc),
            Basis::Spin { .. } => None,
        }
    }
}

/// Simulates the measurement on `truth` with the seed derived from
/// `master_seed`. Returns the data and the acquisition seed.
pub fn acquire(
    cfg: &RunConfig,
    plan: &Plan,
    truth: &DensityMatrix<f64>,
    master_seed: u64,
) -> Result<(Data, u64), CliError> {
    let seed = seeds::acquisition(master_seed);
    let acq = Acquisition { runs: cfg.acquisition_runs(), seed, noise: cfg.noise() };
    let stage = || CliError::at("simulate");
    let data = match plan.scheme {
        SchemePlan::Spin { theta_nodes, phi_nodes, .. } => {
            let grid = QuadratureGrid::new(theta_nodes, phi_nodes).map_err(stage())?;
            Data::Spin(scan_spin(truth, &grid.settings(), acq).map_err(stage())?)
        }
        SchemePlan::DisplacedNumber { beta, eta, n_count, phases, .. } => Data::Phase(
            scan_phase(truth, beta, phases, n_count, eta, acq, cfg.measurement.random_phase).map_err(stage())?,
        ),
    };
    Ok((data, seed))
}

/// Reconstructs the state from `data`.
pub fn reconstruct(cfg: &RunConfig, plan: &Plan, data: &Data) -> Result<Estimate, CliError> {
    let clip = cfg.reconstruction.clip_negative;
    let stage = || CliError::at("reconstruct");
    match (data, &plan.scheme) {
        (Data::Spin(set), SchemePlan::Spin { theta_nodes, phi_nodes, .. }) => {
            let grid = QuadratureGrid::new(*theta_nodes, *phi_nodes).map_err(stage())?;
            let rec = reconstruct_spin(set, &grid, SpinReconOptions { clip_negative: clip }).map_err(stage())?;
            Ok(Estimate {
                rho: rec.rho,
                raw: None,
                corrections: rec.corrections,
                design: None,
                grid_check: rec.condition,
            })
        }
        (Data::Phase(scan), SchemePlan::DisplacedNumber { beta, eta, n1, n_count, .. }) => {
            let n1 = match n1 {
                Some(n) => *n,
                None => select_truncation(scan, *n_count).map_err(stage())?,
            };
            let design = build_design(*beta, n1, *n_count, *eta).map_err(CliError::at("design"))?;
            let rec = reconstruct_fock(scan, &design, FockReconOptions { clip_negative: clip }).map_err(stage())?;
            Ok(Estimate {
                rho: rec.rho,
                raw: Some(rec.raw),
                corrections: rec.corrections,
                design: Some(design),
                grid_check: None,
            })
        }
        _ => Err(CliError::Config(vec!["data do not belong to the configured scheme".into()])),
    }
}

/// Builds the state, simulates the measurement with the seed derived from
/// `master_seed` and reconstructs.
pub fn simulate(cfg: &RunConfig, plan: &Plan, master_seed: u64) -> Result<Simulation, CliError> {
    let truth_full = true_state(cfg, plan)?;
    let (data, acquisition_seed) = acquire(cfg, plan, &truth_full, master_seed)?;
    let estimate = reconstruct(cfg, plan, &data)?;
    assemble(truth_full, data, estimate, acquisition_seed)
}

/// Pairs an estimate with the truth in the estimate's basis.
pub fn assemble(
    truth_full: DensityMatrix<f64>,
    data: Data,
    estimate: Estimate,
    acquisition_seed: u64,
) -> Result<Simulation, CliError> {
    let truth = match estimate.rho.basis {
        Basis::Fock { n_trunc } => truth_full.truncated_to(n_trunc).map_err(CliError::at("reconstruct"))?,
        Basis::Spin { .. } => truth_full.clone(),
    };
    Ok(Simulation { truth_full, truth, data, estimate, acquisition_seed })
}

/// Quasiprobability grids of the true and the reconstructed state.
#[derive(Clone, Debug)]
pub struct NamedGrid {
    pub name: &'static str,
    pub grid: QuasiprobGrid<f64>,
}

pub fn quasiprob_grids(cfg: &RunConfig, sim: &Simulation) -> Result<Vec<NamedGrid>, CliError> {
    let g = &cfg.grids;
    let stage = || CliError::at("quasiprob");
    let mut out = Vec::new();
    match sim.estimate.rho.basis {
        Basis::Spin { .. } => {
            let sphere = SphereGrid::new(g.sphere_theta, g.sphere_phi);
            out.push(NamedGrid { name: "q_sphere_true", grid: q_sphere(&sim.truth_full, &sphere).map_err(stage())? });
            out.push(NamedGrid {
                name: "q_sphere_reconstructed",
                grid: q_sphere(&sim.estimate.rho, &sphere).map_err(stage())?,
            });
        }
        Basis::Fock { .. } => {
            let plane = PlaneGrid::square(g.plane_half_width, g.plane_points);
            out.push(NamedGrid { name: "q_plane_true", grid: q_plane(&sim.truth_full, &plane).map_err(stage())? });
            out.push(NamedGrid {
                name: "q_plane_reconstructed",
                grid: q_plane(&sim.estimate.rho, &plane).map_err(stage())?,
            });
            out.push(NamedGrid { name: "w_plane_true", grid: wigner_plane(&sim.truth_full, &plane).map_err(stage())? });
            out.push(NamedGrid {
                name: "w_plane_reconstructed",
                grid: wigner_plane(&sim.estimate.rho, &plane).map_err(stage())?,
            });
        }
    }
    Ok(out)
}

/// Outcome of a pass/fail property evaluated on a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Largest ratio of the phase-diffused estimates to their standard errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionRatios {
    /// Off-diagonal elements (`s >= 1`) relative to zero.
    pub off_diagonal: f64,
    /// Diagonal elements relative to the true diagonal.
    pub diagonal: f64,
}

/// Compares the linear estimate of a phase-randomized scan with the
/// phase-averaged truth: zero off the diagonal, the true populations on it.
/// Ratios are in units of the standard error predicted for the scan's
/// statistics; with exact data any deviation above `1e-9` counts as
/// infinitely many standard errors.
pub fn diffusion_ratios(sim: &Simulation, cfg: &RunConfig) -> Result<Option<DiffusionRatios>, CliError> {
    let (Data::Phase(scan), Some(raw), Some(design)) = (&sim.data, &sim.estimate.raw, &sim.estimate.design) else {
        return Ok(None);
    };
    let k = scan.k();
    let n1 = design.n1;
    let exact_scan = scan_phase(&sim.truth_full, scan.beta_abs, k, scan.n_count, scan.eta, Acquisition::exact(), true)
        .map_err(CliError::at("checks"))?;
    let se = match scan.acquisition.runs {
        Runs::Finite(runs) => Some(standard_errors(&exact_scan.probs, design, runs, cfg.noise())),
        Runs::Exact => None,
    };
    let ratio = |dev: f64, r: usize, c: usize| match &se {
        Some(se) if se[(r, c)] > 0.0 => dev / se[(r, c)],
        _ if dev <= 1e-9 => 0.0,
        _ => f64::INFINITY,
    };
    let mut out = DiffusionRatios { off_diagonal: 0.0, diagonal: 0.0 };
    for r in 0..=n1 {
        for c in 0..=r {
            if r == c {
                let truth = sim.truth_full.entries.get((r, r)).map_or(0.0, |z| z.re);
                out.diagonal = out.diagonal.max(ratio((raw[(r, r)].re - truth).abs(), r, r));
            } else {
                out.off_diagonal = out.off_diagonal.max(ratio(raw[(r, c)].norm(), r, c));
            }
        }
    }
    Ok(Some(out))
}

/// Properties asserted for the scenario: phase diffusion and a
/// nonnegative Wigner function when the reference phase is random.
pub fn checks(cfg: &RunConfig, sim: &Simulation, grids: &[NamedGrid]) -> Result<Vec<Check>, CliError> {
    let mut out = Vec::new();
    if !cfg.measurement.random_phase {
        return Ok(out);
    }
    if let Some(r) = diffusion_ratios(sim, cfg)? {
        out.push(Check {
            name: "off_diagonal_diffused".into(),
            passed: r.off_diagonal <= DIFFUSION_SIGMAS,
            detail: format!(
                "largest |rho_(m+s,m)|, s >= 1, is {:.2} standard errors (limit {DIFFUSION_SIGMAS})",
                r.off_diagonal
            ),
        });
        out.push(Check {
            name: "diagonal_matches_phase_average".into(),
            passed: r.diagonal <= DIFFUSION_SIGMAS,
            detail: format!(
                "largest diagonal deviation is {:.2} standard errors (limit {DIFFUSION_SIGMAS})",
                r.diagonal
            ),
        });
    }
    if let Some(w) = grids.iter().find(|g| g.name == "w_plane_reconstructed") {
        let min = w.grid.min();
        out.push(Check {
            name: "positive_wigner".into(),
            passed: min >= -POSITIVITY_TOLERANCE,
            detail: format!("minimum of the reconstructed W grid is {min:.3e} (limit -{POSITIVITY_TOLERANCE:.0e})"),
        });
    }
    Ok(out)
}

/// Design matrices of a displaced-number configuration.
pub fn design(plan: &Plan) -> Result<DesignMatrixFamily<f64>, CliError> {
    let SchemePlan::DisplacedNumber { beta, eta, n1, n_count, .. } = plan.scheme else {
        return Err(CliError::Config(vec!["design-report needs measurement.scheme = displaced_number".into()]));
    };
    let Some(n1) = n1 else {
        return Err(CliError::Config(vec!["design-report needs reconstruction.n1".into()]));
    };
    build_design(beta, n1, n_count, eta).map_err(CliError::at("design"))
}

/// Standard error of every element as a function of `|beta|` over the
/// configured seeds.
pub fn tradeoff(cfg: &RunConfig, plan: &Plan, master_seed: u64) -> Result<TradeoffReport, CliError> {
    let SchemePlan::DisplacedNumber { eta, n1, n_count, phases, .. } = plan.scheme else {
        return Err(CliError::Config(vec!["beta-tradeoff needs measurement.scheme = displaced_number".into()]));
    };
    let mut errs = Vec::new();
    if n1.is_none() {
        errs.push("beta-tradeoff needs reconstruction.n1".to_string());
    }
    if cfg.measurement.runs.is_none() {
        errs.push("beta-tradeoff needs finite measurement.runs".to_string());
    }
    if cfg.tradeoff.seeds < 2 {
        errs.push(format!("tradeoff.seeds = {} must be at least 2", cfg.tradeoff.seeds));
    }
    if let Some(b) = cfg.tradeoff.betas.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
        errs.push(format!("tradeoff.betas contains {b}; every |beta| must be positive"));
    }
    if !errs.is_empty() {
        return Err(CliError::Config(errs));
    }
    let truth = true_state(cfg, plan)?;
    let scan_plan = ScanPlan {
        n1: n1.unwrap_or_default(),
        n_count,
        k: phases,
        eta,
        runs: cfg.acquisition_runs(),
        noise: cfg.noise(),
    };
    let seeds = seeds::tradeoff(master_seed, cfg.tradeoff.seeds);
    beta_tradeoff_report(&truth, scan_plan, &cfg.tradeoff.betas, &seeds).map_err(CliError::at("tradeoff"))
}
