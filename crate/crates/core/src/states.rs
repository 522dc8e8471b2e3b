//! State constructors: Fock states, single-mode squeezed states, fixed-N
//! two-mode states in the spin picture, atomic coherent states and the
//! density matrices built from them.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::scalar::{cis, CMatrix, CVector, Real, C};
use crate::specfun::{ln_binomial, HalfInt, DEFAULT_J_MAX};

/// Default normalization tolerance for truncated Fock vectors.
pub const NORM_EPS: f64 = 1e-10;

/// Norm deficit targeted by [`squeezed_state_auto`].
pub const AUTO_TRUNCATION_DEFICIT: f64 = 1e-8;

/// Largest norm deficit accepted by [`squeezed_coefficients`].
pub const MAX_TRUNCATION_DEFICIT: f64 = 0.01;

/// Amplitudes `c_n`, `n = 0..=n_trunc`, of a single-mode state.
#[derive(Clone, Debug, PartialEq)]
pub struct FockVector<T: Real> {
    pub amplitudes: CVector<T>,
    /// `1 - sum |c_n|^2` of the untruncated coefficients over the window,
    /// measured before renormalization (zero for exactly supported states).
    pub norm_deficit: T,
}

impl<T: Real> FockVector<T> {
    pub fn n_trunc(&self) -> usize {
        self.amplitudes.len() - 1
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().map(|c| c.norm_sqr()).fold(T::zero(), |a, b| a + b)
    }

    /// `sum n |c_n|^2` over the stored window.
    pub fn mean_number(&self) -> T {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| T::from_usize_lossy(n) * c.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
    }

    pub fn density(&self) -> DensityMatrix<T> {
        DensityMatrix::from_raw(Basis::Fock { n_trunc: self.n_trunc() }, outer(&self.amplitudes))
    }
}

/// Amplitudes over `m = -j..=j` of a spin-`j` state; index `j + m` equals the
/// number of atoms in mode 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinVector<T: Real> {
    pub j: HalfInt,
    pub amplitudes: CVector<T>,
}

impl<T: Real> SpinVector<T> {
    pub fn amplitude(&self, m: HalfInt) -> C<T> {
        self.amplitudes[self.j.index_of(m)]
    }

    pub fn density(&self) -> DensityMatrix<T> {
        DensityMatrix::from_raw(Basis::Spin { j: self.j }, outer(&self.amplitudes))
    }
}

/// Basis in which a [`DensityMatrix`] is expressed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "snake_case")]
pub enum Basis {
    Fock { n_trunc: usize },
    Spin { j: HalfInt },
}

impl Basis {
    pub fn dim(&self) -> usize {
        match *self {
            Basis::Fock { n_trunc } => n_trunc + 1,
            Basis::Spin { j } => j.dim(),
        }
    }
}

/// Density matrix in a truncated Fock basis or a spin-`j` basis.
///
/// Constructors from state vectors always produce valid matrices. Matrices
/// coming out of a reconstruction are Hermitian with unit trace but may carry
/// small negative eigenvalues from noise, so validity is checked on request
/// with [`DensityMatrix::check`] rather than enforced.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T: Real> {
    pub basis: Basis,
    pub entries: CMatrix<T>,
}

/// Tolerances for [`DensityMatrix::check`].
#[derive(Clone, Copy, Debug)]
pub struct DensityTolerance {
    pub hermitian: f64,
    pub trace: f64,
    pub diagonal: f64,
}

impl Default for DensityTolerance {
    fn default() -> Self {
        DensityTolerance { hermitian: 1e-12, trace: 1e-10, diagonal: 1e-12 }
    }
}

impl<T: Real> DensityMatrix<T> {
    pub fn from_raw(basis: Basis, entries: CMatrix<T>) -> Self {
        assert_eq!(entries.nrows(), basis.dim(), "entries do not match basis dimension");
        assert!(entries.is_square());
        DensityMatrix { basis, entries }
    }

    /// Builds a density matrix and verifies Hermiticity, unit trace and a
    /// nonnegative diagonal.
    pub fn new(basis: Basis, entries: CMatrix<T>) -> Result<Self> {
        if entries.nrows() != basis.dim() || !entries.is_square() {
            return Err(TomoError::DimensionMismatch(format!(
                "{}x{} matrix for basis of dimension {}",
                entries.nrows(),
                entries.ncols(),
                basis.dim()
            )));
        }
        let rho = DensityMatrix { basis, entries };
        rho.check(DensityTolerance::default())?;
        Ok(rho)
    }

    /// Maximally mixed state.
    pub fn maximally_mixed(basis: Basis) -> Self {
        let d = basis.dim();
        let v = T::one() / T::from_usize_lossy(d);
        DensityMatrix::from_raw(basis, CMatrix::from_diagonal_element(d, d, C::new(v, T::zero())))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> C<T> {
        self.entries.trace()
    }

    pub fn check(&self, tol: DensityTolerance) -> Result<()> {
        let herm = crate::scalar::max_abs_diff(&self.entries, &self.entries.adjoint()).to_f64_lossy();
        if herm > tol.hermitian {
            return Err(TomoError::Domain(format!("density matrix not Hermitian (deviation {herm:.3e})")));
        }
        let tr = self.trace();
        let dev = (tr - C::new(T::one(), T::zero())).norm_sqr().sqrt().to_f64_lossy();
        if dev > tol.trace {
            return Err(TomoError::Domain(format!("density matrix trace {tr} deviates from 1 by {dev:.3e}")));
        }
        for i in 0..self.dim() {
            let d = self.entries[(i, i)].re.to_f64_lossy();
            if d < -tol.diagonal {
                return Err(TomoError::Domain(format!("negative diagonal entry {d:.3e} at {i}")));
            }
        }
        Ok(())
    }

    /// Embeds a Fock-basis matrix into a larger truncation, padding with zeros.
    pub fn padded_to(&self, n_trunc: usize) -> Result<Self> {
        let Basis::Fock { n_trunc: own } = self.basis else {
            return Err(TomoError::Domain("padding is only defined for Fock-basis matrices".into()));
        };
        if n_trunc < own {
            return Err(TomoError::DimensionMismatch(format!("cannot pad N = {own} down to {n_trunc}")));
        }
        let mut entries = CMatrix::zeros(n_trunc + 1, n_trunc + 1);
        entries.view_mut((0, 0), (own + 1, own + 1)).copy_from(&self.entries);
        Ok(DensityMatrix::from_raw(Basis::Fock { n_trunc }, entries))
    }

    /// Restriction to the first `n_trunc + 1` Fock levels, renormalized.
    pub fn truncated_to(&self, n_trunc: usize) -> Result<Self> {
        let Basis::Fock { n_trunc: own } = self.basis else {
            return Err(TomoError::Domain("truncation is only defined for Fock-basis matrices".into()));
        };
        if n_trunc > own {
            return self.padded_to(n_trunc);
        }
        let block = self.entries.view((0, 0), (n_trunc + 1, n_trunc + 1)).into_owned();
        let tr = block.trace().re;
        Ok(DensityMatrix::from_raw(Basis::Fock { n_trunc }, block.map(|z| z / tr)))
    }
}

fn outer<T: Real>(v: &CVector<T>) -> CMatrix<T> {
    v * v.adjoint()
}

fn normalize<T: Real>(v: &mut CVector<T>) -> T {
    let n2 = v.iter().map(|c| c.norm_sqr()).fold(T::zero(), |a, b| a + b);
    let n = n2.sqrt();
    if n > T::zero() {
        v.iter_mut().for_each(|c| *c /= n);
    }
    n2
}

/// Raw squeezed-state coefficients `c_0..=c_n_trunc` (not renormalized).
///
/// The Hermite factor is carried through the normalized recurrence
/// `u_n = ((r-1)/(r+1))^(n/2) H_n(y) / sqrt(2^n n!)`, which stays finite for
/// every `r > 0` and reduces to the coherent amplitudes `x0^n / sqrt(n!)` at
/// `r = 1`, where the closed form is indeterminate.
pub fn squeezed_raw<T: Real>(x0: T, r: T, n_trunc: usize) -> Result<Vec<T>> {
    if !r.is_finite() || r <= T::zero() || !x0.is_finite() {
        return Err(TomoError::Domain(format!("squeezing parameter r = {r} must be positive and x0 finite")));
    }
    let one = T::one();
    let pref = (T::lit(2.0) / (r + one)).sqrt() * r.powf(T::lit(0.25)) * (-(r / (r + one)) * x0 * x0).exp();
    let drive = T::lit(2.0) * r * x0 / (r + one);
    let kappa = (r - one) / (r + one);
    let mut out = Vec::with_capacity(n_trunc + 1);
    let (mut prev, mut cur) = (T::zero(), one);
    out.push(pref);
    for n in 0..n_trunc {
        let nf = T::from_usize_lossy(n);
        let next = (drive * cur - kappa * nf.sqrt() * prev) / (nf + one).sqrt();
        prev = cur;
        cur = next;
        out.push(pref * cur);
    }
    if out.iter().any(|c| !c.is_finite()) {
        return Err(TomoError::Range("squeezed coefficients overflow".into()));
    }
    Ok(out)
}

/// Squeezed single-mode state truncated at `n_trunc` and renormalized.
///
/// Fails with a range error when the discarded tail exceeds
/// [`MAX_TRUNCATION_DEFICIT`].
pub fn squeezed_coefficients<T: Real>(x0: T, r: T, n_trunc: usize) -> Result<FockVector<T>> {
    let raw = squeezed_raw(x0, r, n_trunc)?;
    let mut amplitudes = CVector::from_iterator(raw.len(), raw.into_iter().map(|c| C::new(c, T::zero())));
    let n2 = normalize(&mut amplitudes);
    let norm_deficit = T::one() - n2;
    if norm_deficit.to_f64_lossy() > MAX_TRUNCATION_DEFICIT {
        return Err(TomoError::Range(format!(
            "truncation at N = {n_trunc} discards {:.3e} of the norm",
            norm_deficit.to_f64_lossy()
        )));
    }
    Ok(FockVector { amplitudes, norm_deficit })
}

/// Smallest truncation of the squeezed state whose norm deficit is below
/// `max_deficit` (searched up to `limit`).
pub fn squeezed_truncation<T: Real>(x0: T, r: T, max_deficit: f64, limit: usize) -> Result<usize> {
    let raw = squeezed_raw(x0, r, limit)?;
    let mut acc = 0.0f64;
    for (n, c) in raw.iter().enumerate() {
        acc += c.to_f64_lossy().powi(2);
        if 1.0 - acc < max_deficit {
            return Ok(n);
        }
    }
    Err(TomoError::Range(format!("norm deficit stays above {max_deficit:e} up to N = {limit}")))
}

/// Squeezed state truncated where the norm deficit drops below `1e-8`.
pub fn squeezed_state_auto<T: Real>(x0: T, r: T) -> Result<FockVector<T>> {
    let n = squeezed_truncation(x0, r, AUTO_TRUNCATION_DEFICIT, 400)?;
    squeezed_coefficients(x0, r, n)
}

/// Mean occupation `sum n |c_n|^2` of the untruncated squeezed state, by direct
/// summation.
///
/// This evaluates to `x0^2 + (r - 1)^2 / (4 r)`. The expression
/// `x0^2 + (r^2 - 1) / (4 r)` that is sometimes quoted for this family does not
/// match the coefficients and is not used for admissibility checks.
pub fn squeezed_mean_number<T: Real>(x0: T, r: T) -> Result<T> {
    Ok(squeezed_state_auto(x0, r)?.mean_number())
}

/// Fock state `|n>` in a window of `n_trunc + 1` levels.
pub fn fock_state<T: Real>(n: usize, n_trunc: usize) -> Result<FockVector<T>> {
    if n > n_trunc {
        return Err(TomoError::Index { index: n, max: n_trunc });
    }
    let mut amplitudes = CVector::zeros(n_trunc + 1);
    amplitudes[n] = C::new(T::one(), T::zero());
    Ok(FockVector { amplitudes, norm_deficit: T::zero() })
}

/// Two-mode state with `n_atoms` atoms in total whose mode-1 occupation
/// amplitudes are the squeezed coefficients, written as a spin `j = N/2`
/// vector (`m = n_1 - j`).
pub fn two_mode_spin_squeezed<T: Real>(x0: T, r: T, n_atoms: usize) -> Result<SpinVector<T>> {
    let mean = squeezed_mean_number(x0, r)?;
    if mean >= T::from_usize_lossy(n_atoms) {
        return Err(TomoError::Domain(format!(
            "mean mode-1 occupation {mean} is not below the total atom number {n_atoms}"
        )));
    }
    let j = HalfInt::from_doubled(n_atoms as i32);
    if j > DEFAULT_J_MAX {
        return Err(TomoError::Resource(format!("spin {j} exceeds J_max = {DEFAULT_J_MAX}")));
    }
    let raw = squeezed_raw(x0, r, n_atoms)?;
    let mut amplitudes = CVector::from_iterator(raw.len(), raw.into_iter().map(|c| C::new(c, T::zero())));
    normalize(&mut amplitudes);
    Ok(SpinVector { j, amplitudes })
}

/// Spin basis state `|j, m>`.
pub fn spin_basis_state<T: Real>(j: HalfInt, m: HalfInt) -> Result<SpinVector<T>> {
    if m.twice().abs() > j.twice() || (j.twice() - m.twice()) % 2 != 0 {
        return Err(TomoError::Domain(format!("invalid projection {m} for spin {j}")));
    }
    let mut amplitudes = CVector::zeros(j.dim());
    amplitudes[j.index_of(m)] = C::new(T::one(), T::zero());
    Ok(SpinVector { j, amplitudes })
}

/// Atomic coherent state `|theta, phi>`:
/// `sqrt(C(2j, j+m)) sin(theta/2)^(j+m) cos(theta/2)^(j-m) exp(-i m phi)`.
pub fn atomic_coherent_amplitudes<T: Real>(j: HalfInt, theta: T, phi: T) -> Result<SpinVector<T>> {
    if j.twice() < 0 {
        return Err(TomoError::Domain(format!("negative spin {j}")));
    }
    if j > DEFAULT_J_MAX {
        return Err(TomoError::Resource(format!("spin {j} exceeds J_max = {DEFAULT_J_MAX}")));
    }
    let tj = j.twice() as usize;
    let (s, c) = ((theta / T::lit(2.0)).sin(), (theta / T::lit(2.0)).cos());
    let amplitudes = CVector::from_iterator(
        j.dim(),
        j.projections().enumerate().map(|(k, m)| {
            let w = T::lit((0.5 * ln_binomial(tj, k)).exp());
            cis(-(m.to_real::<T>() * phi)) * (w * s.powi(k as i32) * c.powi((tj - k) as i32))
        }),
    );
    Ok(SpinVector { j, amplitudes })
}

/// Real amplitude vector helper used by tests and presets.
pub fn real_vector<T: Real>(values: &[T]) -> CVector<T> {
    DVector::from_iterator(values.len(), values.iter().map(|&v| C::new(v, T::zero())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{E, PI};

    #[test]
    fn vacuum_limit_of_squeezed_family() {
        let v = squeezed_coefficients(0.0f64, 1.0, 10).unwrap();
        assert_abs_diff_eq!(v.amplitudes[0].re, 1.0, epsilon = 1e-15);
        for n in 1..=10 {
            assert_eq!(v.amplitudes[n].norm(), 0.0);
        }
    }

    #[test]
    fn unit_squeezing_is_coherent() {
        let x0 = 1.3f64;
        let v = squeezed_raw(x0, 1.0, 12).unwrap();
        let mut fact = 1.0;
        for (n, c) in v.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let expected = (-x0 * x0 / 2.0).exp() * x0.powi(n as i32) / fact.sqrt();
            assert_abs_diff_eq!(*c, expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn coefficients_are_continuous_across_unit_squeezing() {
        let at_one = squeezed_raw(1.3f64, 1.0, 12).unwrap();
        for r in [1.0 - 1e-7, 1.0 + 1e-7] {
            let near = squeezed_raw(1.3f64, r, 12).unwrap();
            for (a, b) in at_one.iter().zip(&near) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn squeezed_matches_hermite_closed_form() {
        // Direct evaluation with the unnormalized Hermite polynomial.
        let (x0, r) = (3f64.sqrt(), E);
        let raw = squeezed_raw(x0, r, 25).unwrap();
        let y = (2.0 * r * r / (r * r - 1.0)).sqrt() * x0;
        let mut fact = 1.0f64;
        for (n, c) in raw.iter().enumerate() {
            if n > 0 {
                fact *= n as f64;
            }
            let h = crate::specfun::hermite(n, y).unwrap();
            let expected = (2.0 / (r + 1.0)).sqrt() * r.powf(0.25) * ((r - 1.0) / (r + 1.0)).powf(n as f64 / 2.0)
                / (2f64.powi(n as i32) * fact).sqrt()
                * h
                * (-r / (r + 1.0) * x0 * x0).exp();
            assert!((c - expected).abs() <= 1e-12 * expected.abs().max(1e-3), "n = {n}: {c} vs {expected}");
        }
    }

    #[test]
    fn anti_squeezed_branch_is_normalized() {
        for &r in &[0.2f64, 0.5, 0.9] {
            let v = squeezed_state_auto(1.1, r).unwrap();
            assert!(v.norm_deficit < 1e-8);
            let raw = squeezed_raw(1.1f64, r, v.n_trunc()).unwrap();
            let n2: f64 = raw.iter().map(|c| c * c).sum();
            assert_abs_diff_eq!(n2, 1.0, epsilon = 1e-8);
        }
    }

    #[test]
    fn squeezed_mean_number_high_precision() {
        // 50-digit summation of the coefficient series: 3.27154031740762188923...
        let v = squeezed_coefficients(3f64.sqrt(), E, 30).unwrap();
        assert_abs_diff_eq!(v.mean_number(), 3.271_540_317_407_622, epsilon = 1e-8);
        // equals x0^2 + (r-1)^2/(4r)
        assert_abs_diff_eq!(3.0 + (E - 1.0).powi(2) / (4.0 * E), 3.271_540_317_407_622, epsilon = 1e-14);
    }

    #[test]
    fn truncation_deficit_and_error() {
        let v = squeezed_coefficients(5f64.sqrt(), E, 40).unwrap();
        assert!(v.norm_deficit < 1e-6);
        assert_abs_diff_eq!(v.norm_sqr(), 1.0, epsilon = 1e-14);
        assert!(matches!(squeezed_coefficients(5f64.sqrt(), E, 3), Err(TomoError::Range(_))));
        assert!(squeezed_coefficients(1.0f64, -1.0, 3).is_err());
    }

    #[test]
    fn squeezed_vacuum_has_even_parity() {
        for &r in &[2.0f64, E, 5.0] {
            let v = squeezed_coefficients(0.0, r, 30).unwrap();
            for n in (1..=30).step_by(2) {
                assert_eq!(v.amplitudes[n].norm(), 0.0);
            }
        }
    }

    #[test]
    fn fock_states() {
        let v = fock_state::<f64>(5, 10).unwrap();
        assert_eq!(v.amplitudes[5].re, 1.0);
        assert_eq!(fock_state::<f64>(0, 0).unwrap().amplitudes.len(), 1);
        assert!(matches!(fock_state::<f64>(3, 2), Err(TomoError::Index { index: 3, max: 2 })));
    }

    #[test]
    fn two_mode_state_shapes() {
        let v = two_mode_spin_squeezed(0.0f64, 1.0, 4).unwrap();
        assert_eq!(v.amplitudes.len(), 5);
        assert_abs_diff_eq!(v.amplitude(HalfInt::int(-2)).re, 1.0, epsilon = 1e-15);
        let v = two_mode_spin_squeezed(5f64.sqrt(), E, 10).unwrap();
        assert_eq!(v.j, HalfInt::int(5));
        assert_eq!(v.amplitudes.len(), 11);
        assert_abs_diff_eq!(v.amplitudes.norm(), 1.0, epsilon = 1e-12);
        assert!(matches!(two_mode_spin_squeezed(3.0f64, E, 6), Err(TomoError::Domain(_))));
    }

    #[test]
    fn density_from_vector_is_projector() {
        let rho = fock_state::<f64>(0, 2).unwrap().density();
        assert_eq!(rho.entries[(0, 0)].re, 1.0);
        assert_eq!(rho.entries.iter().filter(|z| z.norm() > 0.0).count(), 1);
        rho.check(DensityTolerance::default()).unwrap();
    }

    #[test]
    fn coherent_state_poles() {
        let j = HalfInt::from_doubled(7);
        let north = atomic_coherent_amplitudes(j, 0.0f64, 1.2).unwrap();
        assert_abs_diff_eq!(north.amplitude(-j).norm(), 1.0, epsilon = 1e-15);
        let south = atomic_coherent_amplitudes(j, PI, 0.4).unwrap();
        assert_abs_diff_eq!(south.amplitude(j).norm(), 1.0, epsilon = 1e-14);
        assert!(south.amplitudes.iter().take(7).all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn padding_and_truncation() {
        let rho = squeezed_coefficients(1.0f64, 2.0, 12).unwrap().density();
        let padded = rho.padded_to(15).unwrap();
        assert_eq!(padded.dim(), 16);
        assert_eq!(padded.entries[(15, 15)].norm(), 0.0);
        let cut = rho.truncated_to(6).unwrap();
        assert_abs_diff_eq!(cut.trace().re, 1.0, epsilon = 1e-14);
    }
}
