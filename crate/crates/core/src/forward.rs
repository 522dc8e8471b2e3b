//! Measurement simulation.
//!
//! Case I (no reference field): the two-mode state, viewed as a spin `j`, is
//! rotated by the beam splitter and the atom number in mode 1 is counted,
//! giving `w(m, theta, phi) = [D rho D^dagger]_{mm}`.
//!
//! Case II (coherent reference): the single-mode state is mixed with a
//! coherent reference on a balanced beam splitter and mode 1 is counted.
//! The counting statistics are modelled as those of the displaced number
//! operator, `w(n, beta) = <n| D(-beta) rho D(-beta)^dagger |n>`, with
//! `beta = |beta| exp(i phase)`. The scanned `phase` is the effective phase
//! `arg(beta_ref) - phi_bs + pi/2` between reference and condensate.
//!
//! Finite statistics are produced by [`sample_counts`]. Every row of a scan
//! draws from its own ChaCha20 stream, `stream = tag + row`, seeded with the
//! master seed, so results do not depend on thread scheduling.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::scalar::{cis, CMatrix, Real, C};
use crate::specfun::{ln_binomial, ln_factorial, small_d_matrix, HalfInt, DEFAULT_J_MAX};
use crate::states::{Basis, DensityMatrix};

/// Stream tag for Case I rows.
pub const SPIN_STREAM_TAG: u64 = 1 << 32;
/// Stream tag for Case II rows.
pub const PHASE_STREAM_TAG: u64 = 2 << 32;

/// Beam-splitter setting expressed as the Euler angles `(0, theta, phi)` of
/// the rotation applied to the spin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationSetting<T> {
    pub theta: T,
    pub phi: T,
}

impl<T: Real> RotationSetting<T> {
    pub fn new(theta: T, phi: T) -> Result<Self> {
        if !(theta >= T::zero() && theta <= T::pi()) || !(phi >= T::zero() && phi < T::two_pi()) {
            return Err(TomoError::Domain(format!("rotation setting ({theta}, {phi}) outside [0, pi] x [0, 2 pi)")));
        }
        Ok(RotationSetting { theta, phi })
    }

    /// Setting produced by a beam splitter with mixing angle `theta`
    /// (transmission `cos^2(theta/2)`) followed by the relative phase
    /// `phase`.
    ///
    /// With `J_+ = b1^dagger b2` the beam splitter is a rotation by `theta`
    /// about the axis at azimuth `phase`, whose marginals coincide with those
    /// of the Euler rotation `(0, theta, pi/2 - phase)`.
    pub fn from_beam_splitter(theta: T, phase: T) -> Result<Self> {
        let two_pi = T::two_pi();
        let mut phi = T::frac_pi_2() - phase;
        phi -= (phi / two_pi).floor() * two_pi;
        if phi >= two_pi {
            phi -= two_pi;
        }
        RotationSetting::new(theta, phi)
    }
}

/// Number of simulated events per setting.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Runs {
    /// Infinite statistics: exact probabilities.
    Exact,
    Finite(u64),
}

impl Runs {
    pub fn finite(self) -> Option<u64> {
        match self {
            Runs::Exact => None,
            Runs::Finite(n) => Some(n),
        }
    }
}

/// Finite-statistics noise model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// Counts drawn i.i.d. from the outcome distribution.
    Multinomial,
    /// Each probability perturbed by a Gaussian of standard deviation
    /// `width * w / runs`, then clipped at zero and rescaled.
    Gaussian { width: f64 },
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::Gaussian { width: 1.0 }
    }
}

/// `w(m)` for `m = -j..=j` after the rotation `(0, theta, phi)`.
pub fn spin_marginal_exact<T: Real>(rho: &DensityMatrix<T>, setting: RotationSetting<T>) -> Result<Vec<T>> {
    let Basis::Spin { j } = rho.basis else {
        return Err(TomoError::Domain("spin marginals need a spin-basis density matrix".into()));
    };
    if j > DEFAULT_J_MAX {
        return Err(TomoError::Resource(format!("spin {j} exceeds J_max = {DEFAULT_J_MAX}")));
    }
    Ok(spin_marginal_unchecked(j, &rho.entries, setting.theta, setting.phi))
}

/// Same as [`spin_marginal_exact`] for an arbitrary (possibly non-Hermitian)
/// operator; returns the complex diagonal of `D A D^dagger`.
pub(crate) fn spin_marginal_complex<T: Real>(j: HalfInt, op: &CMatrix<T>, theta: T, phi: T) -> Vec<C<T>> {
    let d = small_d_matrix(j, theta);
    let dim = j.dim();
    let phases: Vec<C<T>> = j.projections().map(|m| cis(-(m.to_real::<T>() * phi))).collect();
    // D_{m a} = d_{m a} e^{-i a phi}
    let rot = CMatrix::from_fn(dim, dim, |r, c| phases[c] * d[(r, c)]);
    let tmp = &rot * op;
    (0..dim)
        .map(|m| (0..dim).fold(C::new(T::zero(), T::zero()), |acc, b| acc + tmp[(m, b)] * rot[(m, b)].conj()))
        .collect()
}

fn spin_marginal_unchecked<T: Real>(j: HalfInt, rho: &CMatrix<T>, theta: T, phi: T) -> Vec<T> {
    spin_marginal_complex(j, rho, theta, phi).into_iter().map(|z| z.re).collect()
}

/// `sqrt(n!/m!) |beta|^(m-n) L_n^(m-n)(|beta|^2) exp(-|beta|^2/2)`, the real
/// factor multiplying `exp(i m phase)` in the displaced-number amplitude of
/// Fock level `m` at count `n`.
///
/// For `m < n` the Laguerre reflection turns the negative power of `|beta|`
/// into a positive one, so the value is finite and accurate down to
/// `|beta| = 0`. Magnitudes are assembled in log space.
pub fn displaced_number_factor<T: Real>(n: usize, m: usize, beta_abs: T) -> T {
    let x = beta_abs * beta_abs;
    let (lo, hi) = (n.min(m), n.max(m));
    let diff = hi - lo;
    let lag = laguerre_nonneg(lo, diff, x);
    let ln_mag = 0.5 * (ln_factorial(lo) - ln_factorial(hi));
    let pow = if diff == 0 { T::one() } else { beta_abs.powi(diff as i32) };
    let sign = if m < n && diff % 2 == 1 { -T::one() } else { T::one() };
    sign * T::lit(ln_mag.exp()) * pow * lag * (-(x / T::lit(2.0))).exp()
}

fn laguerre_nonneg<T: Real>(n: usize, a: usize, x: T) -> T {
    // a >= 0: the plain recurrence is exact and stable here.
    crate::specfun::laguerre_assoc(n, a as i64, x).expect("nonnegative upper index")
}

/// Table `g[n][m]` of [`displaced_number_factor`] for `n = 0..=n_max`,
/// `m = 0..=m_max`.
pub fn displaced_number_table<T: Real>(n_max: usize, m_max: usize, beta_abs: T) -> DMatrix<T> {
    DMatrix::from_fn(n_max + 1, m_max + 1, |n, m| displaced_number_factor(n, m, beta_abs))
}

/// Displaced-number probabilities `w(n, beta)` for `n = 0..=n_count`.
pub fn displaced_number_exact<T: Real>(
    rho: &DensityMatrix<T>,
    beta_abs: T,
    phase: T,
    n_count: usize,
) -> Result<Vec<T>> {
    let Basis::Fock { n_trunc } = rho.basis else {
        return Err(TomoError::Domain("displaced-number probabilities need a Fock-basis density matrix".into()));
    };
    if n_count < n_trunc {
        return Err(TomoError::Domain(format!("N_count = {n_count} must be at least N1 = {n_trunc}")));
    }
    if !beta_abs.is_finite() || beta_abs < T::zero() {
        return Err(TomoError::Domain(format!("|beta| = {beta_abs} must be finite and nonnegative")));
    }
    let g = displaced_number_table(n_count, n_trunc, beta_abs);
    let out = displaced_from_table(&rho.entries, &g, phase);
    if out.iter().any(|w| !w.is_finite()) {
        return Err(TomoError::Range(format!("displaced-number probabilities overflow at |beta| = {beta_abs}")));
    }
    Ok(out)
}

pub(crate) fn displaced_from_table<T: Real>(rho: &CMatrix<T>, g: &DMatrix<T>, phase: T) -> Vec<T> {
    let dim = rho.nrows();
    let phases: Vec<C<T>> = (0..dim).map(|m| cis(T::from_usize_lossy(m) * phase)).collect();
    (0..g.nrows())
        .map(|n| {
            // w = v^dagger rho v, v_m = g(n, m) e^{i m phase}
            let v: Vec<C<T>> = (0..dim).map(|m| phases[m] * g[(n, m)]).collect();
            let mut acc = C::new(T::zero(), T::zero());
            for k in 0..dim {
                let mut row = C::new(T::zero(), T::zero());
                for m in 0..dim {
                    row += rho[(k, m)] * v[m];
                }
                acc += v[k].conj() * row;
            }
            acc.re
        })
        .collect()
}

/// Binomial loss matrix `B[k][n] = C(n, k) eta^k (1 - eta)^(n - k)` with rows
/// `k = 0..=k_out` and columns `n = 0..=n_in`.
pub fn binomial_loss_matrix<T: Real>(eta: T, k_out: usize, n_in: usize) -> DMatrix<T> {
    let e = eta.to_f64_lossy();
    DMatrix::from_fn(k_out + 1, n_in + 1, |k, n| {
        if k > n {
            T::zero()
        } else if e == 1.0 {
            if k == n {
                T::one()
            } else {
                T::zero()
            }
        } else {
            let ln = ln_binomial(n, k) + k as f64 * e.ln() + (n - k) as f64 * (1.0 - e).ln();
            T::lit(ln.exp())
        }
    })
}

/// Detected-count distribution for detector efficiency `eta`:
/// `w_eta(k) = sum_{n >= k} C(n, k) eta^k (1 - eta)^(n - k) w(n)`, `k = 0..=k_out`.
pub fn efficiency_convolve<T: Real>(w: &[T], eta: T, k_out: usize) -> Result<Vec<T>> {
    check_efficiency(eta)?;
    if w.is_empty() {
        return Ok(vec![T::zero(); k_out + 1]);
    }
    let b = binomial_loss_matrix(eta, k_out, w.len() - 1);
    Ok((0..=k_out).map(|k| (0..w.len()).fold(T::zero(), |acc, n| acc + b[(k, n)] * w[n])).collect())
}

pub fn check_efficiency<T: Real>(eta: T) -> Result<()> {
    if !(eta > T::zero() && eta <= T::one()) {
        return Err(TomoError::Domain(format!("detector efficiency eta = {eta} outside (0, 1] (binomial loss model)")));
    }
    Ok(())
}

/// Number of true counts kept before the efficiency convolution is
/// truncated to `n_count`: starts at `n_count + ceil(10 / eta)` and grows
/// until the displaced-number distribution of every Fock level up to `n1`
/// has lost less than `1e-12` of its weight.
pub fn internal_count_range<T: Real>(n1: usize, n_count: usize, beta_abs: T, eta: T) -> usize {
    let e = eta.to_f64_lossy();
    if e >= 1.0 {
        return n_count;
    }
    let mut n_int = n_count + (10.0 / e).ceil() as usize;
    loop {
        let g = displaced_number_table(n_int, n1, beta_abs);
        let worst = (0..=n1)
            .map(|m| 1.0 - (0..=n_int).map(|n| g[(n, m)].to_f64_lossy().powi(2)).sum::<f64>())
            .fold(0.0f64, f64::max);
        if worst < 1e-12 || n_int > 4096 {
            return n_int;
        }
        n_int += 8;
    }
}

/// Displaced-number probabilities including detector efficiency.
pub fn displaced_number_detected<T: Real>(
    rho: &DensityMatrix<T>,
    beta_abs: T,
    phase: T,
    n_count: usize,
    eta: T,
) -> Result<Vec<T>> {
    check_efficiency(eta)?;
    let n1 = rho.dim() - 1;
    let n_int = internal_count_range(n1, n_count, beta_abs, eta);
    let ideal = displaced_number_exact(rho, beta_abs, phase, n_int)?;
    if n_int == n_count {
        return Ok(ideal);
    }
    efficiency_convolve(&ideal, eta, n_count)
}

/// Turns exact probabilities into empirical frequencies.
///
/// Probabilities need not sum to one: the missing weight is an unrecorded
/// outcome (counts beyond the recorded range).
pub fn sample_counts<T: Real>(w: &[T], runs: Runs, rng: &mut ChaCha20Rng, noise: NoiseModel) -> Vec<T> {
    let Some(total) = runs.finite() else {
        return w.to_vec();
    };
    let p: Vec<f64> = w.iter().map(|v| v.to_f64_lossy().max(0.0)).collect();
    match noise {
        NoiseModel::Multinomial => {
            let mut remaining = total;
            let mut rem_p = 1.0f64;
            let mut out = Vec::with_capacity(p.len());
            for &pi in &p {
                if remaining == 0 || rem_p <= 0.0 {
                    out.push(T::zero());
                    continue;
                }
                let q = (pi / rem_p).clamp(0.0, 1.0);
                let k = Binomial::new(remaining, q).expect("valid binomial").sample(rng);
                remaining -= k;
                rem_p -= pi;
                out.push(T::lit(k as f64 / total as f64));
            }
            out
        }
        NoiseModel::Gaussian { width } => {
            let before: f64 = w.iter().map(|v| v.to_f64_lossy()).sum();
            let noisy: Vec<f64> = w
                .iter()
                .map(|v| {
                    let v = v.to_f64_lossy();
                    let sd = width * v.abs() / total as f64;
                    let dv = if sd > 0.0 { Normal::new(0.0, sd).expect("valid normal").sample(rng) } else { 0.0 };
                    (v + dv).max(0.0)
                })
                .collect();
            let after: f64 = noisy.iter().sum();
            let scale = if after > 0.0 { before / after } else { 1.0 };
            noisy.into_iter().map(|v| T::lit(v * scale)).collect()
        }
    }
}

/// Generator for row `row` of a scan with the given stream tag.
pub fn row_rng(seed: u64, tag: u64, row: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(tag + row as u64);
    rng
}

/// Statistics settings shared by both scans.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Acquisition {
    pub runs: Runs,
    pub seed: u64,
    pub noise: NoiseModel,
}

impl Acquisition {
    pub fn exact() -> Self {
        Acquisition { runs: Runs::Exact, seed: 0, noise: NoiseModel::default() }
    }
}

/// Case I data: `probs[setting][j + m]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinMarginalSet<T: Real> {
    pub j: HalfInt,
    pub settings: Vec<RotationSetting<T>>,
    pub probs: Vec<Vec<T>>,
    pub acquisition: Acquisition,
}

/// Case II data: `probs[k][n]` at phases `2 pi k / K`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseScanSet<T: Real> {
    pub beta_abs: T,
    pub eta: T,
    pub n_count: usize,
    pub phases: Vec<T>,
    pub probs: Vec<Vec<T>>,
    pub acquisition: Acquisition,
    pub random_phase: bool,
}

impl<T: Real> PhaseScanSet<T> {
    pub fn k(&self) -> usize {
        self.phases.len()
    }
}

/// Uniform phase grid `2 pi k / K`.
pub fn phase_grid<T: Real>(k: usize) -> Vec<T> {
    (0..k).map(|i| T::two_pi() * T::from_usize_lossy(i) / T::from_usize_lossy(k)).collect()
}

/// Simulates Case I data on the given settings. Detection efficiency is
/// always one here: events whose total count differs from `2j` are discarded.
pub fn scan_spin<T: Real>(
    rho: &DensityMatrix<T>,
    settings: &[RotationSetting<T>],
    acquisition: Acquisition,
) -> Result<SpinMarginalSet<T>> {
    let Basis::Spin { j } = rho.basis else {
        return Err(TomoError::Domain("spin scan needs a spin-basis density matrix".into()));
    };
    let exact: Vec<Vec<T>> = settings.par_iter().map(|s| spin_marginal_exact(rho, *s)).collect::<Result<_>>()?;
    let probs = exact
        .into_par_iter()
        .enumerate()
        .map(|(row, w)| {
            let mut rng = row_rng(acquisition.seed, SPIN_STREAM_TAG, row);
            sample_counts(&w, acquisition.runs, &mut rng, acquisition.noise)
        })
        .collect();
    Ok(SpinMarginalSet { j, settings: settings.to_vec(), probs, acquisition })
}

/// Simulates a Case II phase scan with `k` equally spaced phases.
///
/// With `random_phase`, every event is taken at a uniformly random relative
/// phase while being filed under the nominal grid phase; each row is then a
/// sample of the phase-averaged distribution.
pub fn scan_phase<T: Real>(
    rho: &DensityMatrix<T>,
    beta_abs: T,
    k: usize,
    n_count: usize,
    eta: T,
    acquisition: Acquisition,
    random_phase: bool,
) -> Result<PhaseScanSet<T>> {
    check_efficiency(eta)?;
    if k == 0 {
        return Err(TomoError::InsufficientPhases { required: 1, got: 0 });
    }
    let phases = phase_grid::<T>(k);
    let exact: Vec<Vec<T>> = if random_phase {
        let dephased = DensityMatrix::from_raw(rho.basis, CMatrix::from_diagonal(&rho.entries.diagonal()));
        let w = displaced_number_detected(&dephased, beta_abs, T::zero(), n_count, eta)?;
        vec![w; k]
    } else {
        phases
            .par_iter()
            .map(|&ph| displaced_number_detected(rho, beta_abs, ph, n_count, eta))
            .collect::<Result<_>>()?
    };
    let probs = exact
        .into_par_iter()
        .enumerate()
        .map(|(row, w)| {
            let mut rng = row_rng(acquisition.seed, PHASE_STREAM_TAG, row);
            sample_counts(&w, acquisition.runs, &mut rng, acquisition.noise)
        })
        .collect();
    Ok(PhaseScanSet { beta_abs, eta, n_count, phases, probs, acquisition, random_phase })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{fock_state, spin_basis_state, squeezed_coefficients};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn identity_rotation_returns_diagonal() {
        let j = HalfInt::from_doubled(4);
        let rho = crate::states::atomic_coherent_amplitudes(j, 1.1f64, 0.3).unwrap().density();
        let w = spin_marginal_exact(&rho, RotationSetting::new(0.0, 1.7).unwrap()).unwrap();
        for (i, wi) in w.iter().enumerate() {
            assert_abs_diff_eq!(*wi, rho.entries[(i, i)].re, epsilon = 1e-14);
        }
    }

    #[test]
    fn single_atom_balanced_splitting() {
        let rho = spin_basis_state::<f64>(HalfInt::HALF, HalfInt::HALF).unwrap().density();
        let w = spin_marginal_exact(&rho, RotationSetting::new(PI / 2.0, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(w[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(w[1], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn vacuum_gives_poisson_counts() {
        let rho = fock_state::<f64>(0, 0).unwrap().density();
        for &b in &[0.3f64, 1.1, 3.0] {
            let w = displaced_number_exact(&rho, b, 0.7, 20).unwrap();
            let mut ln_fact = 0.0;
            for (n, wn) in w.iter().enumerate() {
                if n > 0 {
                    ln_fact += (n as f64).ln();
                }
                let p = (-b * b + 2.0 * n as f64 * b.ln() - ln_fact).exp();
                assert!((wn - p).abs() <= 1e-10 * p.max(1e-300), "beta {b} n {n}: {wn} vs {p}");
            }
        }
    }

    #[test]
    fn zero_displacement_reads_diagonal() {
        let rho = squeezed_coefficients(1.0f64, 2.0, 8).unwrap().density();
        let w = displaced_number_exact(&rho, 0.0, 0.4, 10).unwrap();
        for (n, wn) in w.iter().enumerate() {
            let expected = if n <= 8 { rho.entries[(n, n)].re } else { 0.0 };
            assert_abs_diff_eq!(*wn, expected, epsilon = 1e-15);
        }
    }

    #[test]
    fn count_range_precondition() {
        let rho = fock_state::<f64>(5, 7).unwrap().density();
        assert!(displaced_number_exact(&rho, 0.3, 0.0, 6).is_err());
    }

    #[test]
    fn efficiency_examples() {
        let w = vec![0.1f64, 0.2, 0.3, 0.4];
        assert_eq!(efficiency_convolve(&w, 1.0, 3).unwrap(), w);
        let single = efficiency_convolve(&[0.0f64, 1.0], 0.9, 1).unwrap();
        assert_abs_diff_eq!(single[1], 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(single[0], 0.1, epsilon = 1e-15);
        let mut five = vec![0.0f64; 6];
        five[5] = 1.0;
        let out = efficiency_convolve(&five, 0.9, 5).unwrap();
        let binom = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
        for k in 0..=5 {
            let expected = binom[k] * 0.9f64.powi(k as i32) * 0.1f64.powi(5 - k as i32);
            assert_abs_diff_eq!(out[k], expected, epsilon = 1e-15);
        }
        assert!(efficiency_convolve(&w, 0.0, 3).is_err());
        assert!(efficiency_convolve(&w, 1.2, 3).is_err());
    }

    #[test]
    fn exact_runs_leave_data_untouched() {
        let w = vec![0.25f64, 0.5, 0.25];
        let mut rng = row_rng(1, 0, 0);
        assert_eq!(sample_counts(&w, Runs::Exact, &mut rng, NoiseModel::default()), w);
        assert_eq!(sample_counts(&w, Runs::Exact, &mut rng, NoiseModel::Multinomial), w);
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let w = vec![0.1f64, 0.6, 0.3];
        for noise in [NoiseModel::Multinomial, NoiseModel::Gaussian { width: 1.0 }] {
            let a = sample_counts(&w, Runs::Finite(1000), &mut row_rng(9, 0, 3), noise);
            let b = sample_counts(&w, Runs::Finite(1000), &mut row_rng(9, 0, 3), noise);
            assert_eq!(a, b);
            let c = sample_counts(&w, Runs::Finite(1000), &mut row_rng(9, 0, 4), noise);
            assert_ne!(a, c);
        }
    }

    #[test]
    fn gaussian_noise_keeps_mass_and_sign() {
        let w = vec![0.0f64, 1e-3, 0.4, 0.599];
        let out = sample_counts(&w, Runs::Finite(3), &mut row_rng(5, 0, 0), NoiseModel::Gaussian { width: 1.0 });
        assert!(out.iter().all(|&v| v >= 0.0));
        assert_abs_diff_eq!(out.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn multinomial_frequency_bound() {
        // |f - w| < 5 sqrt(max w / runs) for at least 99 of 100 seeds.
        let w = vec![0.05f64, 0.2, 0.4, 0.25, 0.1];
        let runs = 20_000u64;
        let bound = 5.0 * (0.4f64 / runs as f64).sqrt();
        let ok = (0..100u64)
            .filter(|&s| {
                let f = sample_counts(&w, Runs::Finite(runs), &mut row_rng(s, 0, 0), NoiseModel::Multinomial);
                f.iter().zip(&w).all(|(a, b)| (a - b).abs() < bound)
            })
            .count();
        assert!(ok >= 99, "{ok} of 100 seeds within bound");
    }

    #[test]
    fn beam_splitter_mapping_wraps() {
        let s = RotationSetting::from_beam_splitter(1.0f64, 0.0).unwrap();
        assert_abs_diff_eq!(s.phi, PI / 2.0, epsilon = 1e-15);
        let s = RotationSetting::from_beam_splitter(1.0f64, PI).unwrap();
        assert_abs_diff_eq!(s.phi, 1.5 * PI, epsilon = 1e-14);
        assert!(RotationSetting::new(4.0f64, 0.0).is_err());
    }

    #[test]
    fn random_phase_rows_are_identical_when_exact() {
        let rho = squeezed_coefficients(3f64.sqrt(), std::f64::consts::E, 12).unwrap().density();
        let scan = scan_phase(&rho, 1.1, 9, 16, 0.9, Acquisition::exact(), true).unwrap();
        for row in &scan.probs[1..] {
            assert_eq!(row, &scan.probs[0]);
        }
        let total: f64 = scan.probs[0].iter().sum();
        assert!(total <= 1.0 + 1e-10);
    }
}
