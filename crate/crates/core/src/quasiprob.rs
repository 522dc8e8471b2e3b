//! Quasiprobability distributions and state fidelity.
//!
//! Conventions:
//!
//! * planar Q function `Q(alpha) = <alpha| rho |alpha>`, so that
//!   `(1/pi) integral Q d^2 alpha = 1` and `0 <= Q <= 1`;
//! * spherical Q function `Q(theta, phi) = <theta, phi| rho |theta, phi>`
//!   with the atomic coherent states of [`atomic_coherent_amplitudes`],
//!   normalized by `((2j + 1) / 4 pi) integral Q sin(theta) dtheta dphi = 1`;
//! * Wigner function `W(alpha) = (2/pi) Tr[rho D(alpha) P D(alpha)^dag]`
//!   with the photon-number parity `P`, so that `integral W d^2 alpha = 1` and
//!   `-2/pi <= W <= 2/pi`.
//!
//! The Wigner function is evaluated through `D(alpha) P D(alpha)^dag = D(2 alpha) P`,
//! which turns the parity sum into a finite double sum over the support of
//! `rho` with closed-form displacement matrix elements. No truncation of the
//! parity series is involved.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::scalar::{cis, cr, CMatrix, CVector, Real, C};
use crate::specfun::{ln_factorial, HalfInt};
use crate::states::{atomic_coherent_amplitudes, Basis, DensityMatrix};

/// Which distribution a grid holds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuasiprobKind {
    QPlane,
    QSphere,
    WPlane,
}

impl QuasiprobKind {
    pub fn name(self) -> &'static str {
        match self {
            QuasiprobKind::QPlane => "q_plane",
            QuasiprobKind::QSphere => "q_sphere",
            QuasiprobKind::WPlane => "w_plane",
        }
    }

    pub fn axis_names(self) -> [&'static str; 2] {
        match self {
            QuasiprobKind::QSphere => ["theta", "phi"],
            _ => ["re_alpha", "im_alpha"],
        }
    }
}

/// Uniform axis `start + i * step`, `i = 0..count`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridAxis<T> {
    pub start: T,
    pub step: T,
    pub count: usize,
}

impl<T: Real> GridAxis<T> {
    /// `count` points from `start` to `end` inclusive.
    pub fn closed(start: T, end: T, count: usize) -> Self {
        let step = if count > 1 { (end - start) / T::from_usize_lossy(count - 1) } else { T::zero() };
        Self { start, step, count }
    }

    /// `count` points from `start` to `end` with `end` excluded.
    pub fn half_open(start: T, end: T, count: usize) -> Self {
        Self { start, step: (end - start) / T::from_usize_lossy(count.max(1)), count }
    }

    pub fn value(&self, i: usize) -> T {
        self.start + self.step * T::from_usize_lossy(i)
    }

    pub fn values(&self) -> Vec<T> {
        (0..self.count).map(|i| self.value(i)).collect()
    }
}

/// Rectangular grid in the phase-space plane, `alpha = x + i y`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneGrid<T> {
    pub re: GridAxis<T>,
    pub im: GridAxis<T>,
}

impl<T: Real> PlaneGrid<T> {
    pub fn square(half_width: T, count: usize) -> Self {
        let axis = GridAxis::closed(-half_width, half_width, count);
        Self { re: axis, im: axis }
    }
}

impl<T: Real> Default for PlaneGrid<T> {
    fn default() -> Self {
        Self::square(T::lit(5.0), 101)
    }
}

/// Grid on the sphere: `theta` over `[0, pi]` inclusive, `phi` over `[0, 2 pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereGrid<T> {
    pub theta: GridAxis<T>,
    pub phi: GridAxis<T>,
}

impl<T: Real> SphereGrid<T> {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        Self {
            theta: GridAxis::closed(T::zero(), T::pi(), n_theta),
            phi: GridAxis::half_open(T::zero(), T::two_pi(), n_phi),
        }
    }
}

impl<T: Real> Default for SphereGrid<T> {
    fn default() -> Self {
        Self::new(91, 181)
    }
}

/// Sampled quasiprobability; `values[(i, k)]` sits at `(axes[0].value(i), axes[1].value(k))`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiprobGrid<T: Real> {
    pub kind: QuasiprobKind,
    pub axes: [GridAxis<T>; 2],
    pub values: DMatrix<T>,
    /// Largest imaginary part discarded when forming the real values.
    pub imag_residue: f64,
}

impl<T: Real> QuasiprobGrid<T> {
    pub fn min(&self) -> T {
        self.values.iter().fold(T::max_value().unwrap(), |a, &v| a.min(v))
    }

    pub fn max(&self) -> T {
        self.values.iter().fold(T::min_value().unwrap(), |a, &v| a.max(v))
    }

    /// Value at the grid point closest to `(a, b)`.
    pub fn nearest(&self, a: T, b: T) -> T {
        let idx = |axis: &GridAxis<T>, v: T| {
            if axis.step == T::zero() {
                return 0;
            }
            let i = ((v - axis.start) / axis.step).round().to_f64_lossy();
            (i.max(0.0) as usize).min(axis.count - 1)
        };
        self.values[(idx(&self.axes[0], a), idx(&self.axes[1], b))]
    }

    /// Riemann-sum normalization in the convention of the grid's kind.
    ///
    /// `j` is only used for spherical grids.
    pub fn normalization(&self, j: HalfInt) -> f64 {
        let [a0, a1] = self.axes;
        let cell = (a0.step * a1.step).to_f64_lossy();
        match self.kind {
            QuasiprobKind::QPlane => self.values.iter().map(|v| v.to_f64_lossy()).sum::<f64>() * cell / PI,
            QuasiprobKind::WPlane => self.values.iter().map(|v| v.to_f64_lossy()).sum::<f64>() * cell,
            QuasiprobKind::QSphere => {
                let mut acc = 0.0;
                for i in 0..a0.count {
                    let sin = a0.value(i).to_f64_lossy().sin();
                    acc += sin * self.values.row(i).iter().map(|v| v.to_f64_lossy()).sum::<f64>();
                }
                acc * cell * (j.dim() as f64) / (4.0 * PI)
            }
        }
    }
}

fn require_fock<T: Real>(rho: &DensityMatrix<T>) -> Result<usize> {
    match rho.basis {
        Basis::Fock { n_trunc } => Ok(n_trunc),
        Basis::Spin { .. } => Err(TomoError::Domain("expected a Fock-basis density matrix".into())),
    }
}

fn sample_plane<T: Real, F>(grid: &PlaneGrid<T>, f: F) -> (DMatrix<T>, f64)
where
    F: Fn(C<T>) -> C<T> + Sync,
{
    let (nx, ny) = (grid.re.count, grid.im.count);
    let points: Vec<C<T>> =
        (0..nx * ny).into_par_iter().map(|idx| f(C::new(grid.re.value(idx / ny), grid.im.value(idx % ny)))).collect();
    let residue = points.iter().fold(0.0f64, |a, z| a.max(z.im.abs().to_f64_lossy()));
    (DMatrix::from_fn(nx, ny, |i, k| points[i * ny + k].re), residue)
}

/// Truncated coherent amplitudes `exp(-|alpha|^2/2) alpha^n / sqrt(n!)`.
pub fn coherent_amplitudes<T: Real>(alpha: C<T>, n_trunc: usize) -> CVector<T> {
    let mut v = CVector::zeros(n_trunc + 1);
    let mut cur = cr(T::lit((-0.5 * alpha.norm_sqr().to_f64_lossy()).exp()));
    for n in 0..=n_trunc {
        v[n] = cur;
        cur = cur * alpha / T::from_usize_lossy(n + 1).sqrt();
    }
    v
}

fn expectation<T: Real>(rho: &CMatrix<T>, v: &CVector<T>) -> C<T> {
    (v.adjoint() * rho * v)[(0, 0)]
}

/// Planar Q function of a Fock-basis density matrix.
pub fn q_plane<T: Real>(rho: &DensityMatrix<T>, grid: &PlaneGrid<T>) -> Result<QuasiprobGrid<T>> {
    let n_trunc = require_fock(rho)?;
    let (values, imag_residue) =
        sample_plane(grid, |alpha| expectation(&rho.entries, &coherent_amplitudes(alpha, n_trunc)));
    Ok(QuasiprobGrid { kind: QuasiprobKind::QPlane, axes: [grid.re, grid.im], values, imag_residue })
}

/// Spherical Q function of a spin-basis density matrix.
pub fn q_sphere<T: Real>(rho: &DensityMatrix<T>, grid: &SphereGrid<T>) -> Result<QuasiprobGrid<T>> {
    let j = match rho.basis {
        Basis::Spin { j } => j,
        Basis::Fock { .. } => return Err(TomoError::Domain("expected a spin-basis density matrix".into())),
    };
    let (nt, np) = (grid.theta.count, grid.phi.count);
    let points = (0..nt * np)
        .into_par_iter()
        .map(|idx| {
            let v = atomic_coherent_amplitudes(j, grid.theta.value(idx / np), grid.phi.value(idx % np))?;
            Ok(expectation(&rho.entries, &v.amplitudes))
        })
        .collect::<Result<Vec<C<T>>>>()?;
    let imag_residue = points.iter().fold(0.0f64, |a, z| a.max(z.im.abs().to_f64_lossy()));
    let values = DMatrix::from_fn(nt, np, |i, k| points[i * np + k].re);
    Ok(QuasiprobGrid { kind: QuasiprobKind::QSphere, axes: [grid.theta, grid.phi], values, imag_residue })
}

/// `<n| D(gamma) |m>` for `n, m = 0..=n_trunc`.
///
/// For `n >= m` the element is
/// `sqrt(m!/n!) gamma^(n-m) exp(-|gamma|^2/2) L_m^(n-m)(|gamma|^2)`,
/// and for `n < m` the factor `gamma^(n-m)` becomes `(-gamma^*)^(m-n)` with
/// the roles of `n` and `m` exchanged. Each associated Laguerre column is
/// built by the three-term recurrence in the degree.
pub fn displacement_matrix<T: Real>(gamma: C<T>, n_trunc: usize) -> CMatrix<T> {
    let x = gamma.norm_sqr();
    let r = x.sqrt();
    let chi = if r > T::zero() { gamma.im.atan2(gamma.re) } else { T::zero() };
    let xf = x.to_f64_lossy();
    let ln_r = r.to_f64_lossy().ln();
    let mut out = CMatrix::zeros(n_trunc + 1, n_trunc + 1);
    for d in 0..=n_trunc {
        // L_k^(d)(x) for k = 0..=n_trunc - d
        let mut lag = Vec::with_capacity(n_trunc + 1 - d);
        let a = T::from_usize_lossy(d);
        for k in 0..=(n_trunc - d) {
            let v = match k {
                0 => T::one(),
                1 => T::one() + a - x,
                _ => {
                    let kf = T::from_usize_lossy(k);
                    ((T::lit(2.0) * kf - T::one() + a - x) * lag[k - 1] - (kf - T::one() + a) * lag[k - 2]) / kf
                }
            };
            lag.push(v);
        }
        for (k, &l) in lag.iter().enumerate() {
            let (lo, hi) = (k, k + d);
            let ln_pre =
                0.5 * (ln_factorial(lo) - ln_factorial(hi)) - 0.5 * xf + if d > 0 { d as f64 * ln_r } else { 0.0 };
            let mag = if d > 0 && r == T::zero() { T::zero() } else { T::lit(ln_pre.exp()) * l };
            let df = T::from_usize_lossy(d);
            // lower triangle: gamma^d = r^d e^{i d chi}
            out[(hi, lo)] = cis(df * chi) * mag;
            if d > 0 {
                // upper triangle: (-gamma^*)^d = (-1)^d r^d e^{-i d chi}
                let sign = if d % 2 == 0 { T::one() } else { -T::one() };
                out[(lo, hi)] = cis(-(df * chi)) * (mag * sign);
            }
        }
    }
    out
}

/// Wigner function of a Fock-basis density matrix.
pub fn wigner_plane<T: Real>(rho: &DensityMatrix<T>, grid: &PlaneGrid<T>) -> Result<QuasiprobGrid<T>> {
    let n_trunc = require_fock(rho)?;
    let two_over_pi = T::lit(2.0 / PI);
    let (values, imag_residue) = sample_plane(grid, |alpha| {
        let d = displacement_matrix(alpha * T::lit(2.0), n_trunc);
        let mut acc = C::new(T::zero(), T::zero());
        for m in 0..=n_trunc {
            let parity = if m % 2 == 0 { T::one() } else { -T::one() };
            let mut col = C::new(T::zero(), T::zero());
            for n in 0..=n_trunc {
                col += rho.entries[(m, n)] * d[(n, m)];
            }
            acc += col * parity;
        }
        acc * two_over_pi
    });
    Ok(QuasiprobGrid { kind: QuasiprobKind::WPlane, axes: [grid.re, grid.im], values, imag_residue })
}

fn hermitian_sqrt<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    let h = (m + m.adjoint()) * cr(T::lit(0.5));
    let eig = SymmetricEigen::new(h);
    let sq = eig.eigenvalues.map(|v| cr(v.max(T::zero()).sqrt()));
    &eig.eigenvectors * CMatrix::from_diagonal(&sq) * eig.eigenvectors.adjoint()
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(a) b sqrt(a)))^2`, clamped to `[0, 1]`.
///
/// Negative eigenvalues of either argument, which a noisy linear estimate
/// can have, are treated as zero.
pub fn fidelity<T: Real>(a: &DensityMatrix<T>, b: &DensityMatrix<T>) -> Result<T> {
    if a.basis != b.basis {
        return Err(TomoError::DimensionMismatch(format!("fidelity between {:?} and {:?}", a.basis, b.basis)));
    }
    let sa = hermitian_sqrt(&a.entries);
    let inner = &sa * &b.entries * &sa;
    let h = (&inner + inner.adjoint()) * cr(T::lit(0.5));
    let eig = SymmetricEigen::new(h);
    let tr = eig.eigenvalues.iter().fold(T::zero(), |acc, &v| acc + v.max(T::zero()).sqrt());
    Ok((tr * tr).min(T::one()).max(T::zero()))
}
