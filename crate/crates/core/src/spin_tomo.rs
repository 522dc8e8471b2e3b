//! Case I reconstruction: the spin-`j` density matrix from rotated
//! number-difference statistics.
//!
//! The inversion kernel couples the data with `D^{j'}_{0 m'}` and a pair of
//! 3j symbols, summed over `j' = 0..=2j`, and integrated over the rotation
//! group with measure `dOmega / 8 pi^2`. Neither the data nor the kernel
//! depends on the first Euler angle, so that integral contributes `2 pi`.
//! The remaining integrand is a spherical polynomial of degree at most `4j`:
//! Gauss-Legendre in `cos theta` with `2j + 1` nodes and a uniform `phi`
//! grid with `4j + 1` points integrate it exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::forward::{spin_marginal_complex, RotationSetting, SpinMarginalSet};
use crate::scalar::{cis, CMatrix, Real, C};
use crate::specfun::{small_d_matrix, wigner_3j_f64, HalfInt, DEFAULT_J_MAX};
use crate::states::{Basis, DensityMatrix};

/// Round-trip error above which a sub-minimal grid is rejected.
pub const GRID_SELF_CHECK_THRESHOLD: f64 = 1e-6;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product grid over `(theta, phi)`: Gauss-Legendre in `cos theta`, uniform
/// in `phi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureGrid<T> {
    pub theta_nodes: Vec<T>,
    /// Gauss-Legendre weights attached to `cos theta` (they sum to 2).
    pub theta_weights: Vec<T>,
    pub k_phi: usize,
}

impl<T: Real> QuadratureGrid<T> {
    pub fn new(n_theta: usize, k_phi: usize) -> Result<Self> {
        if n_theta == 0 || k_phi == 0 {
            return Err(TomoError::Domain("quadrature grid needs at least one node per axis".into()));
        }
        let (x, w) = gauss_legendre(n_theta);
        Ok(QuadratureGrid {
            theta_nodes: x.iter().map(|&c| T::lit(c.acos())).collect(),
            theta_weights: w.into_iter().map(T::lit).collect(),
            k_phi,
        })
    }

    /// Smallest grid that integrates the spin-`j` kernel exactly.
    pub fn exact_for(j: HalfInt) -> Self {
        Self::new(Self::min_theta(j), Self::min_phi(j)).expect("non-empty grid")
    }

    pub fn min_theta(j: HalfInt) -> usize {
        j.twice() as usize + 1
    }

    pub fn min_phi(j: HalfInt) -> usize {
        2 * j.twice() as usize + 1
    }

    pub fn n_theta(&self) -> usize {
        self.theta_nodes.len()
    }

    pub fn meets_bounds(&self, j: HalfInt) -> bool {
        self.n_theta() >= Self::min_theta(j) && self.k_phi >= Self::min_phi(j)
    }

    pub fn phi_nodes(&self) -> Vec<T> {
        crate::forward::phase_grid(self.k_phi)
    }

    /// Rotation settings in theta-major order, matching the row order
    /// expected by [`reconstruct_spin`].
    pub fn settings(&self) -> Vec<RotationSetting<T>> {
        let phis = self.phi_nodes();
        self.theta_nodes.iter().flat_map(|&theta| phis.iter().map(move |&phi| RotationSetting { theta, phi })).collect()
    }
}

/// What the output conditioning changed.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Corrections {
    /// `max |rho - rho^dagger| / 2` of the raw estimate.
    pub hermitian_defect: f64,
    pub trace_before_re: f64,
    pub trace_before_im: f64,
    /// Total negative eigenvalue weight removed, when clipping was requested.
    pub clipped_weight: Option<f64>,
}

/// Hermitizes, renormalizes the trace and optionally clips negative
/// eigenvalues.
pub fn condition_output<T: Real>(raw: CMatrix<T>, basis: Basis, clip: bool) -> (DensityMatrix<T>, Corrections) {
    let hermitian_defect = crate::scalar::max_abs_diff(&raw, &raw.adjoint()).to_f64_lossy() / 2.0;
    let herm = (&raw + raw.adjoint()).map(|z| z / T::lit(2.0));
    let tr = raw.trace();
    let trace_re = herm.trace().re;
    let mut entries = herm.map(|z| z / trace_re);
    let mut clipped_weight = None;
    if clip {
        let (fixed, removed) = clip_negative_eigenvalues(&entries);
        entries = fixed;
        clipped_weight = Some(removed);
    }
    let corrections = Corrections {
        hermitian_defect,
        trace_before_re: tr.re.to_f64_lossy(),
        trace_before_im: tr.im.to_f64_lossy(),
        clipped_weight,
    };
    (DensityMatrix::from_raw(basis, entries), corrections)
}

/// Sets negative eigenvalues to zero and renormalizes; returns the removed
/// negative weight.
pub fn clip_negative_eigenvalues<T: Real>(rho: &CMatrix<T>) -> (CMatrix<T>, f64) {
    let eig = rho.clone().symmetric_eigen();
    let mut removed = 0.0;
    let vals: Vec<T> = eig
        .eigenvalues
        .iter()
        .map(|&v| {
            if v < T::zero() {
                removed -= v.to_f64_lossy();
                T::zero()
            } else {
                v
            }
        })
        .collect();
    let total = vals.iter().fold(T::zero(), |a, &b| a + b);
    let v = &eig.eigenvectors;
    let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&x| C::new(x / total, T::zero())),
    ));
    (v * diag * v.adjoint(), removed)
}

/// Linear inversion of marginals sampled on `grid`, without any output
/// conditioning. `probs[setting][j + m]`, settings in theta-major order.
pub fn invert_marginals<T: Real>(j: HalfInt, grid: &QuadratureGrid<T>, probs: &[Vec<C<T>>]) -> Result<CMatrix<T>> {
    let dim = j.dim();
    let k_phi = grid.k_phi;
    if probs.len() != grid.n_theta() * k_phi {
        return Err(TomoError::DimensionMismatch(format!(
            "{} settings for a {}x{} grid",
            probs.len(),
            grid.n_theta(),
            k_phi
        )));
    }
    if let Some(bad) = probs.iter().find(|row| row.len() != dim) {
        return Err(TomoError::DimensionMismatch(format!("row of length {} for spin {j}", bad.len())));
    }
    let tj = j.twice() as usize;
    let q_max = tj as i32; // |m'| <= 2j
    let n_q = 2 * tj + 1;
    let phis = grid.phi_nodes();

    // Per theta node: sum_k w(m, theta_i, phi_k) e^{-i q phi_k} d^{j'}_{0 q}(theta_i),
    // accumulated into kernel[j'][q][m]. Reduced in node order afterwards.
    let per_node: Vec<Vec<C<T>>> = (0..grid.n_theta())
        .into_par_iter()
        .map(|i| {
            let theta = grid.theta_nodes[i];
            let mut fourier = vec![C::new(T::zero(), T::zero()); dim * n_q];
            for (k, &phi) in phis.iter().enumerate() {
                let row = &probs[i * k_phi + k];
                for qi in 0..n_q {
                    let q = qi as i32 - q_max;
                    let ph = cis(-(T::lit(f64::from(q)) * phi));
                    for m in 0..dim {
                        fourier[m * n_q + qi] += row[m] * ph;
                    }
                }
            }
            let mut out = vec![C::new(T::zero(), T::zero()); (tj + 1) * n_q * dim];
            for jp in 0..=tj {
                let jp_h = HalfInt::int(jp as i32);
                let dmat = small_d_matrix::<T>(jp_h, theta);
                for mp in -(jp as i32)..=(jp as i32) {
                    let qi = (mp + q_max) as usize;
                    let d0 = dmat[(jp, (mp + jp as i32) as usize)] * grid.theta_weights[i];
                    for m in 0..dim {
                        out[(jp * n_q + qi) * dim + m] = fourier[m * n_q + qi] * d0;
                    }
                }
            }
            out
        })
        .collect();
    let mut kernel = vec![C::new(T::zero(), T::zero()); (tj + 1) * n_q * dim];
    for node in &per_node {
        for (acc, v) in kernel.iter_mut().zip(node) {
            *acc += *v;
        }
    }
    // dOmega / 8 pi^2 with the psi integral done: (1 / 4 pi) (2 pi / K) sum.
    let measure = T::one() / (T::lit(2.0) * T::from_usize_lossy(k_phi));
    kernel.iter_mut().for_each(|z| *z *= measure);

    let mut rho = CMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            let ma = j.projection_at(a);
            let mb = j.projection_at(b);
            let mp = mb - ma; // m' = m2 - m1
            let mut acc = C::new(T::zero(), T::zero());
            for jp in 0..=tj {
                if mp.twice().abs() > 2 * jp as i32 {
                    continue;
                }
                let jp_h = HalfInt::int(jp as i32);
                let w_ab = wigner_3j_f64(j, j, jp_h, ma, -mb, mp);
                if w_ab == 0.0 {
                    continue;
                }
                let qi = (mp.twice() / 2 + q_max) as usize;
                let scale = ((2 * jp + 1) * (2 * jp + 1)) as f64 * w_ab;
                let mut inner = C::new(T::zero(), T::zero());
                for (mi, m) in j.projections().enumerate() {
                    let w_m = wigner_3j_f64(j, j, jp_h, m, -m, HalfInt::ZERO);
                    // (-1)^(m - m2), an integer power
                    let sign = if ((m - mb).twice() / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    inner += kernel[(jp * n_q + qi) * dim + mi] * T::lit(sign * w_m);
                }
                acc += inner * T::lit(scale);
            }
            rho[(a, b)] = acc;
        }
    }
    Ok(rho)
}

/// Options for [`reconstruct_spin`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpinReconOptions {
    /// Clip negative eigenvalues after Hermitization.
    pub clip_negative: bool,
}

/// Reconstructed spin density matrix plus what the conditioning changed.
#[derive(Clone, Debug)]
pub struct SpinReconstruction<T: Real> {
    pub rho: DensityMatrix<T>,
    pub corrections: Corrections,
    pub condition: Option<ConditionReport>,
}

/// Reconstructs `rho^(j)` from marginals taken on the nodes of `grid`.
pub fn reconstruct_spin<T: Real>(
    data: &SpinMarginalSet<T>,
    grid: &QuadratureGrid<T>,
    options: SpinReconOptions,
) -> Result<SpinReconstruction<T>> {
    let j = data.j;
    if j > DEFAULT_J_MAX {
        return Err(TomoError::Resource(format!("spin {j} exceeds J_max = {DEFAULT_J_MAX}")));
    }
    if j == HalfInt::ZERO {
        let rho = DensityMatrix::from_raw(Basis::Spin { j }, CMatrix::identity(1, 1));
        return Ok(SpinReconstruction {
            rho,
            corrections: Corrections { trace_before_re: 1.0, ..Default::default() },
            condition: None,
        });
    }
    let expected = grid.settings();
    if expected.len() != data.settings.len() {
        return Err(TomoError::DimensionMismatch(format!(
            "{} data settings, grid has {}",
            data.settings.len(),
            expected.len()
        )));
    }
    let tol = T::lit(1e-9);
    for (s, g) in data.settings.iter().zip(&expected) {
        if (s.theta - g.theta).abs() > tol || (s.phi - g.phi).abs() > tol {
            return Err(TomoError::DimensionMismatch(format!(
                "setting ({}, {}) is not the grid node ({}, {})",
                s.theta, s.phi, g.theta, g.phi
            )));
        }
    }
    let mut condition = None;
    if !grid.meets_bounds(j) {
        let report = condition_report(j, grid)?;
        if report.worst_error > GRID_SELF_CHECK_THRESHOLD {
            return Err(TomoError::GridTooCoarse { error: report.worst_error, threshold: GRID_SELF_CHECK_THRESHOLD });
        }
        condition = Some(report);
    }
    let probs: Vec<Vec<C<T>>> =
        data.probs.iter().map(|row| row.iter().map(|&w| C::new(w, T::zero())).collect()).collect();
    let raw = invert_marginals(j, grid, &probs)?;
    let (rho, corrections) = condition_output(raw, Basis::Spin { j }, options.clip_negative);
    Ok(SpinReconstruction { rho, corrections, condition })
}

/// Worst-case round-trip error of forward model followed by inversion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub two_j: i32,
    pub n_theta: usize,
    pub k_phi: usize,
    pub meets_bounds: bool,
    pub worst_error: f64,
}

/// Pushes every matrix unit `|a><b|` through the forward model and the
/// inversion and reports the largest entry-wise deviation.
pub fn condition_report<T: Real>(j: HalfInt, grid: &QuadratureGrid<T>) -> Result<ConditionReport> {
    let dim = j.dim();
    let settings = grid.settings();
    let mut worst = 0.0f64;
    if j != HalfInt::ZERO {
        let errors: Vec<f64> = (0..dim * dim)
            .into_par_iter()
            .map(|idx| {
                let (a, b) = (idx / dim, idx % dim);
                let mut unit = CMatrix::<T>::zeros(dim, dim);
                unit[(a, b)] = C::new(T::one(), T::zero());
                let probs: Vec<Vec<C<T>>> =
                    settings.iter().map(|s| spin_marginal_complex(j, &unit, s.theta, s.phi)).collect();
                let back = invert_marginals(j, grid, &probs)?;
                Ok(crate::scalar::max_abs_diff(&back, &unit).to_f64_lossy())
            })
            .collect::<Result<_>>()?;
        worst = errors.into_iter().fold(0.0, f64::max);
    }
    Ok(ConditionReport {
        two_j: j.twice(),
        n_theta: grid.n_theta(),
        k_phi: grid.k_phi,
        meets_bounds: grid.meets_bounds(j),
        worst_error: worst,
    })
}
