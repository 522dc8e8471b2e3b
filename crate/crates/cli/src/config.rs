//! Run configuration: TOML schema, bundled presets, overrides and
//! validation.

use std::fmt;
use std::path::{Path, PathBuf};

use bectomo::dn_tomo::{default_phases, min_phases};
use bectomo::forward::{check_efficiency, NoiseModel, Runs};
use bectomo::spin_tomo::QuadratureGrid;
use bectomo::states::{fock_state, squeezed_coefficients, squeezed_state_auto, two_mode_spin_squeezed};
use bectomo::HalfInt;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

const PRESETS: [(&str, &str); 4] = [
    ("fig1", include_str!("../presets/fig1.toml")),
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig3", include_str!("../presets/fig3.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, src)| *src)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Squeezed,
    Fock,
    TwoModeSqueezed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub kind: StateKind,
    pub x0: Option<f64>,
    pub r: Option<f64>,
    /// Fock level for `kind = "fock"`.
    pub n: Option<usize>,
    /// Total atom number for `kind = "two_mode_squeezed"`.
    pub atoms: Option<usize>,
    /// Fock truncation of the true state; chosen automatically when absent.
    pub n_trunc: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Spin,
    DisplacedNumber,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Multinomial,
    Gaussian,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSpec {
    pub scheme: Scheme,
    pub beta: Option<f64>,
    #[serde(default = "one")]
    pub eta: f64,
    /// Events per setting or phase; exact probabilities when absent.
    pub runs: Option<u64>,
    #[serde(default)]
    pub noise: NoiseKind,
    #[serde(default = "one")]
    pub noise_width: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub random_phase: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionSpec {
    /// Fock truncation of the estimate; selected from the data when absent.
    pub n1: Option<usize>,
    pub n_count: Option<usize>,
    pub phases: Option<usize>,
    pub theta_nodes: Option<usize>,
    pub phi_nodes: Option<usize>,
    #[serde(default)]
    pub clip_negative: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSpec {
    pub plane_half_width: f64,
    pub plane_points: usize,
    pub sphere_theta: usize,
    pub sphere_phi: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { plane_half_width: 5.0, plane_points: 101, sphere_theta: 91, sphere_phi: 181 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TradeoffSpec {
    pub betas: Vec<f64>,
    pub seeds: usize,
}

impl Default for TradeoffSpec {
    fn default() -> Self {
        TradeoffSpec { betas: vec![0.05, 0.3, 0.7, 1.1, 1.5], seeds: 50 }
    }
}

fn custom() -> String {
    "custom".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "custom")]
    pub scenario: String,
    pub state: StateSpec,
    pub measurement: MeasurementSpec,
    #[serde(default)]
    pub reconstruction: ReconstructionSpec,
    #[serde(default)]
    pub grids: GridSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub tradeoff: TradeoffSpec,
}

/// Command-line settings that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub exact: bool,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(source: &str, origin: &str) -> Result<Self, CliError> {
        toml::from_str(source).map_err(|e| CliError::Config(vec![format!("{origin}: {e}")]))
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        let src = preset_source(name).ok_or_else(|| {
            let known: Vec<_> = preset_names().collect();
            CliError::Config(vec![format!("unknown scenario `{name}` (known: {})", known.join(", "))])
        })?;
        Self::parse(src, &format!("preset {name}"))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let src = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&src, &path.display().to_string())
    }

    pub fn apply(&mut self, o: &Overrides) {
        if o.exact {
            self.measurement.runs = None;
        }
        if let Some(seed) = o.seed {
            self.measurement.seed = seed;
        }
        if let Some(out) = &o.out {
            self.output.dir = Some(out.clone());
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output.dir.clone().unwrap_or_else(|| PathBuf::from(format!("runs/{}", self.scenario)))
    }

    pub fn acquisition_runs(&self) -> Runs {
        self.measurement.runs.map_or(Runs::Exact, Runs::Finite)
    }

    pub fn noise(&self) -> NoiseModel {
        match self.measurement.noise {
            NoiseKind::Multinomial => NoiseModel::Multinomial,
            NoiseKind::Gaussian => NoiseModel::Gaussian { width: self.measurement.noise_width },
        }
    }

    /// Checks every precondition and returns the resolved plan, or all
    /// problems found at once.
    pub fn validate(&self) -> Result<Plan, CliError> {
        let mut errs = Vec::new();
        let state = self.validate_state(&mut errs);
        let m = &self.measurement;
        if let Some(0) = m.runs {
            errs.push("measurement.runs must be positive (omit it for exact probabilities)".into());
        }
        if !(m.noise_width.is_finite() && m.noise_width > 0.0) {
            errs.push(format!("measurement.noise_width = {} must be positive", m.noise_width));
        }
        let g = &self.grids;
        if !(g.plane_half_width.is_finite() && g.plane_half_width > 0.0) {
            errs.push(format!("grids.plane_half_width = {} must be positive", g.plane_half_width));
        }
        for (name, v) in
            [("plane_points", g.plane_points), ("sphere_theta", g.sphere_theta), ("sphere_phi", g.sphere_phi)]
        {
            if v == 0 {
                errs.push(format!("grids.{name} must be at least 1"));
            }
        }
        let scheme = match m.scheme {
            Scheme::Spin => self.validate_spin(state, &mut errs),
            Scheme::DisplacedNumber => self.validate_displaced(state, &mut errs),
        };
        match scheme {
            Some(scheme) if errs.is_empty() => Ok(Plan { scheme }),
            _ => Err(CliError::Config(errs)),
        }
    }

    fn validate_state(&self, errs: &mut Vec<String>) -> Option<StateKind> {
        let s = &self.state;
        let need = |errs: &mut Vec<String>, field: &str, v: bool| {
            if !v {
                errs.push(format!("state.{field} is required for kind = {:?}", s.kind));
            }
            v
        };
        let before = errs.len();
        match s.kind {
            StateKind::Squeezed => {
                if need(errs, "x0", s.x0.is_some()) & need(errs, "r", s.r.is_some()) {
                    let (x0, r) = (s.x0.unwrap(), s.r.unwrap());
                    let built = match s.n_trunc {
                        Some(n) => squeezed_coefficients(x0, r, n).map(|_| ()),
                        None => squeezed_state_auto(x0, r).map(|_| ()),
                    };
                    if let Err(e) = built {
                        errs.push(format!("state: {e}"));
                    }
                }
            }
            StateKind::Fock => {
                if need(errs, "n", s.n.is_some()) {
                    let n = s.n.unwrap();
                    if let Err(e) = fock_state::<f64>(n, s.n_trunc.unwrap_or(n)) {
                        errs.push(format!("state: {e}"));
                    }
                }
            }
            StateKind::TwoModeSqueezed => {
                if need(errs, "x0", s.x0.is_some())
                    & need(errs, "r", s.r.is_some())
                    & need(errs, "atoms", s.atoms.is_some())
                {
                    if let Err(e) = two_mode_spin_squeezed(s.x0.unwrap(), s.r.unwrap(), s.atoms.unwrap()) {
                        errs.push(format!("state: {e}"));
                    }
                }
            }
        }
        (errs.len() == before).then_some(s.kind)
    }

    fn validate_spin(&self, state: Option<StateKind>, errs: &mut Vec<String>) -> Option<SchemePlan> {
        let m = &self.measurement;
        let rec = &self.reconstruction;
        if state.is_some_and(|k| k != StateKind::TwoModeSqueezed) {
            errs.push("measurement.scheme = spin needs state.kind = two_mode_squeezed".into());
        }
        if m.beta.is_some() || m.random_phase || m.eta != 1.0 {
            errs.push("measurement.beta, eta and random_phase apply only to scheme = displaced_number".into());
        }
        for (name, v) in [("n1", rec.n1), ("n_count", rec.n_count), ("phases", rec.phases)] {
            if v.is_some() {
                errs.push(format!("reconstruction.{name} applies only to scheme = displaced_number"));
            }
        }
        let atoms = self.state.atoms?;
        let j = HalfInt::from_doubled(atoms as i32);
        let theta_nodes = rec.theta_nodes.unwrap_or_else(|| QuadratureGrid::<f64>::min_theta(j));
        let phi_nodes = rec.phi_nodes.unwrap_or_else(|| QuadratureGrid::<f64>::min_phi(j));
        if theta_nodes < QuadratureGrid::<f64>::min_theta(j) {
            errs.push(format!(
                "reconstruction.theta_nodes = {theta_nodes} is below 2j + 1 = {} for j = {j}",
                QuadratureGrid::<f64>::min_theta(j)
            ));
        }
        if phi_nodes < QuadratureGrid::<f64>::min_phi(j) {
            errs.push(format!(
                "reconstruction.phi_nodes = {phi_nodes} is below 4j + 1 = {} for j = {j}",
                QuadratureGrid::<f64>::min_phi(j)
            ));
        }
        Some(SchemePlan::Spin { j, theta_nodes, phi_nodes })
    }

    fn validate_displaced(&self, state: Option<StateKind>, errs: &mut Vec<String>) -> Option<SchemePlan> {
        let m = &self.measurement;
        let rec = &self.reconstruction;
        if state == Some(StateKind::TwoModeSqueezed) {
            errs.push("measurement.scheme = displaced_number needs a single-mode state (squeezed or fock)".into());
        }
        if rec.theta_nodes.is_some() || rec.phi_nodes.is_some() {
            errs.push("reconstruction.theta_nodes and phi_nodes apply only to scheme = spin".into());
        }
        if let Err(e) = check_efficiency(m.eta) {
            errs.push(format!("measurement.eta = {}: {e}", m.eta));
        }
        let beta = match m.beta {
            None => {
                errs.push("measurement.beta is required for scheme = displaced_number".into());
                None
            }
            Some(b) if !(b.is_finite() && b >= 0.0) => {
                errs.push(format!("measurement.beta = {b} must be a finite non-negative amplitude"));
                None
            }
            Some(b) => Some(b),
        };
        let n1 = rec.n1;
        let n_count = rec.n_count.or(n1.map(|n| n + 5));
        if n_count.is_none() {
            errs.push("reconstruction.n_count is required when n1 is selected from the data".into());
        }
        if let (Some(n1), Some(nc)) = (n1, n_count) {
            if nc < n1 {
                errs.push(format!("reconstruction.n_count = {nc} must be at least n1 = {n1}"));
            }
        }
        if let (Some(b), Some(n1)) = (beta, n1) {
            if b == 0.0 && n1 > 0 {
                errs.push("measurement.beta = 0 leaves every off-diagonal band unobservable".into());
            }
        }
        let phases = match (rec.phases, n1) {
            (Some(k), Some(n1)) => {
                if k < min_phases(n1) {
                    errs.push(format!("reconstruction.phases = {k} is below 2 n1 + 1 = {}", min_phases(n1)));
                }
                k
            }
            (Some(k), None) => k,
            (None, Some(n1)) => default_phases(n1),
            (None, None) => default_phases(n_count.unwrap_or(0)),
        };
        Some(SchemePlan::DisplacedNumber { beta: beta?, eta: m.eta, n1, n_count: n_count?, phases })
    }
}

/// Numbers resolved from a validated configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub scheme: SchemePlan,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SchemePlan {
    Spin { j: HalfInt, theta_nodes: usize, phi_nodes: usize },
    DisplacedNumber { beta: f64, eta: f64, n1: Option<usize>, n_count: usize, phases: usize },
}

impl fmt::Display for SchemePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemePlan::Spin { j, theta_nodes, phi_nodes } => {
                write!(f, "spin scheme, j = {j}, {theta_nodes} x {phi_nodes} settings")
            }
            SchemePlan::DisplacedNumber { beta, eta, n1, n_count, phases } => {
                let n1 = n1.map_or("from data".to_string(), |n| n.to_string());
                write!(f, "displaced-number scheme, |beta| = {beta}, eta = {eta}, N1 = {n1}, N_count = {n_count}, K = {phases}")
            }
        }
    }
}
