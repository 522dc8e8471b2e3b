//! Case II reconstruction from phase-scanned displaced-number statistics.
//!
//! For a fixed reference amplitude `|beta|`, the `s`-th Fourier component of
//! `w(n, phase)` over the phase only involves the `s`-th diagonal band of
//! the density matrix:
//!
//! ```text
//! w_s(n) = sum_m A_s[n][m] <m + s| rho |m>,
//! A_s[n][m] = g(n, m) g(n, m + s)
//! ```
//!
//! with `g` from [`displaced_number_factor`]. Detector inefficiency
//! multiplies `A_s` from the left by the binomial loss matrix. Each band is
//! recovered with the least-squares inverse `M_s = (A_s^T A_s)^-1 A_s^T`,
//! evaluated through an SVD so that the conditioning of `A_s` is not squared.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::forward::{
    binomial_loss_matrix, check_efficiency, displaced_number_factor, displaced_number_table, internal_count_range,
    scan_phase, Acquisition, NoiseModel, PhaseScanSet, Runs,
};
use crate::scalar::{cis, CMatrix, Real, C};
use crate::spin_tomo::{condition_output, Corrections};
use crate::states::{Basis, DensityMatrix};

/// Largest acceptable `|trace - 1|` of the raw estimate.
pub const MAX_TRACE_DEVIATION: f64 = 0.2;

/// Trailing-diagonal threshold used by [`select_truncation`].
pub const TRUNCATION_TAIL_THRESHOLD: f64 = 1e-3;

/// Design matrix and least-squares inverse for one Fourier order.
#[derive(Clone, Debug)]
pub struct DesignBlock<T: Real> {
    pub s: usize,
    /// `(n_count + 1) x (n1 + 1 - s)`
    pub a: DMatrix<T>,
    /// `(n1 + 1 - s) x (n_count + 1)`
    pub m: DMatrix<T>,
    pub singular_max: f64,
    pub singular_min: f64,
}

impl<T: Real> DesignBlock<T> {
    pub fn condition(&self) -> f64 {
        self.singular_max / self.singular_min
    }
}

/// Design matrices `A_s` and inverses `M_s` for `s = 0..=n1`.
#[derive(Clone, Debug)]
pub struct DesignMatrixFamily<T: Real> {
    pub beta_abs: T,
    pub eta: T,
    pub n1: usize,
    pub n_count: usize,
    /// True-count range used before the efficiency convolution is cut.
    pub n_internal: usize,
    pub blocks: Vec<DesignBlock<T>>,
}

impl<T: Real> DesignMatrixFamily<T> {
    pub fn s_max(&self) -> usize {
        self.n1
    }

    pub fn conditions(&self) -> Vec<f64> {
        self.blocks.iter().map(DesignBlock::condition).collect()
    }

    /// `max_s ||M_s A_s - I||_max`.
    pub fn identity_residual(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                let prod = &b.m * &b.a;
                let eye = DMatrix::<T>::identity(prod.nrows(), prod.ncols());
                (prod - eye).iter().fold(0.0f64, |acc, v| acc.max(v.abs().to_f64_lossy()))
            })
            .fold(0.0, f64::max)
    }
}

fn validate_design_inputs<T: Real>(beta_abs: T, n1: usize, n_count: usize, eta: T) -> Result<()> {
    check_efficiency(eta)?;
    if n_count < n1 {
        return Err(TomoError::Domain(format!("N_count = {n_count} must be at least N1 = {n1}")));
    }
    if !beta_abs.is_finite() || beta_abs < T::zero() {
        return Err(TomoError::Domain(format!("|beta| = {beta_abs} must be finite and nonnegative")));
    }
    if beta_abs == T::zero() && n1 > 0 {
        return Err(TomoError::DegenerateDesign(
            "at |beta| = 0 the off-diagonal bands s >= 1 do not enter the count statistics".into(),
        ));
    }
    Ok(())
}

/// Builds the design family for reference amplitude `beta_abs`, truncation
/// `n1`, recorded counts `0..=n_count` and detector efficiency `eta`.
pub fn build_design<T: Real>(beta_abs: T, n1: usize, n_count: usize, eta: T) -> Result<DesignMatrixFamily<T>> {
    validate_design_inputs(beta_abs, n1, n_count, eta)?;
    let n_internal = internal_count_range(n1, n_count, beta_abs, eta);
    let g = displaced_number_table(n_internal, n1, beta_abs);
    let loss = (n_internal > n_count).then(|| binomial_loss_matrix(eta, n_count, n_internal));
    let blocks =
        (0..=n1).into_par_iter().map(|s| design_block(&g, loss.as_ref(), n1, s)).collect::<Result<Vec<_>>>()?;
    Ok(DesignMatrixFamily { beta_abs, eta, n1, n_count, n_internal, blocks })
}

fn design_block<T: Real>(g: &DMatrix<T>, loss: Option<&DMatrix<T>>, n1: usize, s: usize) -> Result<DesignBlock<T>> {
    let cols = n1 + 1 - s;
    let ideal = DMatrix::from_fn(g.nrows(), cols, |n, m| g[(n, m)] * g[(n, m + s)]);
    let a = match loss {
        Some(b) => b * ideal,
        None => ideal,
    };
    let (m, singular_max, singular_min) = pseudo_inverse(&a, s)?;
    Ok(DesignBlock { s, a, m, singular_max, singular_min })
}

/// Least-squares inverse of a full-column-rank matrix via SVD.
fn pseudo_inverse<T: Real>(a: &DMatrix<T>, s: usize) -> Result<(DMatrix<T>, f64, f64)> {
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.iter().fold(T::zero(), |acc, &v| acc.max(v));
    let smin = sv.iter().fold(smax, |acc, &v| acc.min(v));
    let rank_tol = T::default_epsilon() * T::lit(1000.0);
    if !smax.is_finite() || smax <= T::zero() || smin <= smax * rank_tol {
        let condition = if smin > T::zero() { (smax / smin).to_f64_lossy() } else { f64::INFINITY };
        return Err(TomoError::Conditioning { s, condition });
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let inv_sigma = DMatrix::from_diagonal(&sv.map(|v| T::one() / v));
    let m = v_t.transpose() * inv_sigma * u.transpose();
    Ok((m, smax.to_f64_lossy(), smin.to_f64_lossy()))
}

/// Smallest phase count that resolves every Fourier order up to `n1`.
pub fn min_phases(n1: usize) -> usize {
    2 * n1 + 1
}

/// Default phase count `2 n1 + 3`.
pub fn default_phases(n1: usize) -> usize {
    2 * n1 + 3
}

/// `w_s(n) = (1/K) sum_k w(n, phase_k) exp(i s phase_k)` for `n = 0..=n_count`.
pub fn fourier_coefficients<T: Real>(scan: &PhaseScanSet<T>, s: usize, n1: usize) -> Result<Vec<C<T>>> {
    let k = scan.k();
    if k < min_phases(n1) {
        return Err(TomoError::InsufficientPhases { required: min_phases(n1), got: k });
    }
    if s > n1 {
        return Err(TomoError::Domain(format!("Fourier order s = {s} exceeds N1 = {n1}")));
    }
    let sf = T::from_usize_lossy(s);
    let kf = T::from_usize_lossy(k);
    let mut out = vec![C::new(T::zero(), T::zero()); scan.n_count + 1];
    for (row, &phase) in scan.probs.iter().zip(&scan.phases) {
        let e = cis(sf * phase);
        for (acc, &w) in out.iter_mut().zip(row) {
            *acc += e * w;
        }
    }
    Ok(out.into_iter().map(|z| z / kf).collect())
}

/// Options for [`reconstruct_fock`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FockReconOptions {
    pub clip_negative: bool,
}

/// Result of [`reconstruct_fock`].
#[derive(Clone, Debug)]
pub struct FockReconstruction<T: Real> {
    pub rho: DensityMatrix<T>,
    /// Linear estimate before Hermitization and trace renormalization.
    pub raw: CMatrix<T>,
    pub corrections: Corrections,
}

fn same<T: Real>(a: T, b: T) -> bool {
    (a - b).abs() <= T::lit(1e-12) * (T::one() + a.abs().max(b.abs()))
}

/// Band-by-band linear inversion of the scan.
pub fn reconstruct_fock<T: Real>(
    scan: &PhaseScanSet<T>,
    design: &DesignMatrixFamily<T>,
    options: FockReconOptions,
) -> Result<FockReconstruction<T>> {
    if !same(scan.beta_abs, design.beta_abs) || !same(scan.eta, design.eta) || scan.n_count != design.n_count {
        return Err(TomoError::DimensionMismatch(format!(
            "scan (|beta| {}, eta {}, N {}) does not match design (|beta| {}, eta {}, N {})",
            scan.beta_abs, scan.eta, scan.n_count, design.beta_abs, design.eta, design.n_count
        )));
    }
    if let Some(bad) = scan.probs.iter().find(|r| r.len() != scan.n_count + 1) {
        return Err(TomoError::DimensionMismatch(format!(
            "row of length {} for N_count = {}",
            bad.len(),
            scan.n_count
        )));
    }
    let n1 = design.n1;
    let mut raw = CMatrix::zeros(n1 + 1, n1 + 1);
    for block in &design.blocks {
        let s = block.s;
        let ws = fourier_coefficients(scan, s, n1)?;
        let est = apply_real(&block.m, &ws);
        for (m, v) in est.into_iter().enumerate() {
            raw[(m + s, m)] = v;
            if s > 0 {
                raw[(m, m + s)] = v.conj();
            }
        }
    }
    let tr = raw.trace().re.to_f64_lossy();
    if (tr - 1.0).abs() > MAX_TRACE_DEVIATION || !tr.is_finite() {
        return Err(TomoError::DataInconsistency(format!(
            "raw trace {tr:.4} deviates from 1 by more than {MAX_TRACE_DEVIATION}"
        )));
    }
    let (rho, corrections) = condition_output(raw.clone(), Basis::Fock { n_trunc: n1 }, options.clip_negative);
    Ok(FockReconstruction { rho, raw, corrections })
}

fn apply_real<T: Real>(m: &DMatrix<T>, v: &[C<T>]) -> Vec<C<T>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).fold(C::new(T::zero(), T::zero()), |acc, c| acc + v[c] * m[(r, c)])).collect()
}

/// Chooses the smallest `n1` whose zeroth-band reconstruction puts less than
/// `1e-3` of the weight on its last level.
pub fn select_truncation<T: Real>(scan: &PhaseScanSet<T>, max_n1: usize) -> Result<usize> {
    let limit = max_n1.min(scan.n_count).min((scan.k().saturating_sub(1)) / 2);
    let w0 = fourier_coefficients(scan, 0, 0)?;
    for n1 in 1..=limit {
        let n_int = internal_count_range(n1, scan.n_count, scan.beta_abs, scan.eta);
        let g = displaced_number_table(n_int, n1, scan.beta_abs);
        let loss = (n_int > scan.n_count).then(|| binomial_loss_matrix(scan.eta, scan.n_count, n_int));
        let block = match design_block(&g, loss.as_ref(), n1, 0) {
            Ok(b) => b,
            Err(TomoError::Conditioning { .. }) => continue,
            Err(e) => return Err(e),
        };
        let diag = apply_real(&block.m, &w0);
        let total: f64 = diag.iter().map(|z| z.re.to_f64_lossy()).sum();
        if total > 0.0 && (diag[n1].re.to_f64_lossy() / total).abs() < TRUNCATION_TAIL_THRESHOLD {
            return Ok(n1);
        }
    }
    Err(TomoError::DataInconsistency(format!("no truncation up to N1 = {limit} leaves a negligible tail")))
}

/// Standard error of each element of the linear estimate when the scan rows
/// are drawn from `expected[k]` with the given statistics.
///
/// Rows are independent; within a row the covariance is multinomial,
/// `(diag p - p p^T) / runs`, or diagonal `(width p / runs)^2` for the
/// Gaussian model. Returns a symmetric real matrix of `sqrt(E|delta|^2)`.
pub fn standard_errors<T: Real>(
    expected: &[Vec<T>],
    design: &DesignMatrixFamily<T>,
    runs: u64,
    noise: NoiseModel,
) -> DMatrix<f64> {
    let n1 = design.n1;
    let k = expected.len() as f64;
    let r = runs as f64;
    let mut var = DMatrix::<f64>::zeros(n1 + 1, n1 + 1);
    for block in &design.blocks {
        let s = block.s;
        let mm = block.m.map(|v| v.to_f64_lossy());
        for row in expected {
            let p: Vec<f64> = row.iter().map(|v| v.to_f64_lossy().max(0.0)).collect();
            for m in 0..mm.nrows() {
                let v = match noise {
                    NoiseModel::Multinomial => {
                        let mean: f64 = (0..p.len()).map(|n| mm[(m, n)] * p[n]).sum();
                        let second: f64 = (0..p.len()).map(|n| mm[(m, n)].powi(2) * p[n]).sum();
                        (second - mean * mean) / r
                    }
                    NoiseModel::Gaussian { width } => {
                        (0..p.len()).map(|n| (mm[(m, n)] * width * p[n] / r).powi(2)).sum()
                    }
                };
                var[(m + s, m)] += v / (k * k);
            }
        }
    }
    DMatrix::from_fn(n1 + 1, n1 + 1, |a, b| {
        let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
        var[(hi, lo)].max(0.0).sqrt()
    })
}

/// Experimental plan shared by the scan simulation and the reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPlan {
    pub n1: usize,
    pub n_count: usize,
    pub k: usize,
    pub eta: f64,
    pub runs: Runs,
    pub noise: NoiseModel,
}

/// One line of the tradeoff table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffEntry {
    pub beta: f64,
    pub row: usize,
    pub col: usize,
    pub std_err: f64,
}

/// Monte Carlo spread of the element estimates as a function of `|beta|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffReport {
    pub entries: Vec<TradeoffEntry>,
    /// Condition number of `A_0` per `|beta|`.
    pub condition_a0: Vec<(f64, f64)>,
    pub seeds: Vec<u64>,
}

impl TradeoffReport {
    fn select<'a>(&'a self, beta: f64) -> impl Iterator<Item = &'a TradeoffEntry> + 'a {
        self.entries.iter().filter(move |e| (e.beta - beta).abs() < 1e-12)
    }

    /// Mean standard error of the diagonal elements at `beta`.
    pub fn mean_diagonal(&self, beta: f64) -> f64 {
        let v: Vec<f64> = self.select(beta).filter(|e| e.row == e.col).map(|e| e.std_err).collect();
        v.iter().sum::<f64>() / v.len().max(1) as f64
    }

    /// Standard error of element `(row, col)` at `beta`.
    pub fn element(&self, beta: f64, row: usize, col: usize) -> Option<f64> {
        self.select(beta).find(|e| e.row == row && e.col == col).map(|e| e.std_err)
    }
}

/// Repeats scan and reconstruction for every `|beta|` and seed and reports
/// the sample standard deviation of each lower-triangle element of the raw
/// estimate.
pub fn beta_tradeoff_report<T: Real>(
    rho: &DensityMatrix<T>,
    plan: ScanPlan,
    beta_grid: &[f64],
    seeds: &[u64],
) -> Result<TradeoffReport> {
    if seeds.len() < 2 {
        return Err(TomoError::Domain("the tradeoff report needs at least two seeds".into()));
    }
    let n1 = plan.n1;
    let eta = T::lit(plan.eta);
    let mut entries = Vec::new();
    let mut condition_a0 = Vec::new();
    for &beta in beta_grid {
        let b = T::lit(beta);
        let design = build_design(b, n1, plan.n_count, eta)?;
        condition_a0.push((beta, design.blocks[0].condition()));
        let estimates: Vec<CMatrix<T>> = seeds
            .par_iter()
            .map(|&seed| {
                let acq = Acquisition { runs: plan.runs, seed, noise: plan.noise };
                let scan = scan_phase(rho, b, plan.k, plan.n_count, eta, acq, false)?;
                let rec = reconstruct_fock(&scan, &design, FockReconOptions::default())?;
                Ok(rec.raw)
            })
            .collect::<Result<_>>()?;
        let ns = estimates.len() as f64;
        for row in 0..=n1 {
            for col in 0..=row {
                let mean = estimates.iter().fold(C::new(0.0, 0.0), |acc, e| {
                    acc + C::new(e[(row, col)].re.to_f64_lossy(), e[(row, col)].im.to_f64_lossy())
                }) / ns;
                let ss: f64 = estimates
                    .iter()
                    .map(|e| {
                        (C::new(e[(row, col)].re.to_f64_lossy(), e[(row, col)].im.to_f64_lossy()) - mean).norm_sqr()
                    })
                    .sum();
                entries.push(TradeoffEntry { beta, row, col, std_err: (ss / (ns - 1.0)).sqrt() });
            }
        }
    }
    Ok(TradeoffReport { entries, condition_a0, seeds: seeds.to_vec() })
}

/// Convenience: `A_s[n][m]` for a single entry at unit efficiency.
pub fn design_entry<T: Real>(n: usize, m: usize, s: usize, beta_abs: T) -> T {
    displaced_number_factor(n, m, beta_abs) * displaced_number_factor(n, m + s, beta_abs)
}

/// Real vector helper for tests.
pub fn to_complex<T: Real>(v: &DVector<T>) -> Vec<C<T>> {
    v.iter().map(|&x| C::new(x, T::zero())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::scan_phase;
    use crate::states::{fock_state, squeezed_coefficients};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::E;

    #[test]
    fn pseudo_inverse_identity_small_beta() {
        let d = build_design(0.3f64, 7, 12, 1.0).unwrap();
        assert_eq!(d.blocks.len(), 8);
        assert!(d.identity_residual() < 1e-8, "residual {}", d.identity_residual());
        for b in &d.blocks {
            assert_eq!(b.a.shape(), (13, 8 - b.s));
            assert_eq!(b.m.shape(), (8 - b.s, 13));
        }
    }

    #[test]
    fn zero_band_tends_to_identity() {
        let d = build_design(1e-6f64, 4, 6, 1.0).unwrap();
        let a0 = &d.blocks[0].a;
        for n in 0..=6 {
            for m in 0..=4 {
                assert_abs_diff_eq!(a0[(n, m)], if n == m { 1.0 } else { 0.0 }, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn zero_band_columns_are_complete() {
        let (n1, beta) = (6usize, 1.1f64);
        let d = build_design(beta, n1, n1 + 40, 1.0).unwrap();
        for m in 0..=n1 {
            let col: f64 = d.blocks[0].a.column(m).sum();
            assert_abs_diff_eq!(col, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn degenerate_and_invalid_designs() {
        assert!(matches!(build_design(0.0f64, 3, 5, 1.0), Err(TomoError::DegenerateDesign(_))));
        assert!(build_design(0.0f64, 0, 5, 1.0).is_ok());
        assert!(build_design(0.5f64, 6, 5, 1.0).is_err());
        assert!(build_design(0.5f64, 3, 5, 0.0).is_err());
    }

    #[test]
    fn diagonal_state_has_no_phase_dependence() {
        let rho = fock_state::<f64>(5, 7).unwrap().density();
        let scan = scan_phase(&rho, 0.3, 17, 12, 1.0, Acquisition::exact(), false).unwrap();
        for s in 1..=7 {
            let ws = fourier_coefficients(&scan, s, 7).unwrap();
            assert!(ws.iter().all(|z| z.norm() < 1e-12));
        }
        let w0 = fourier_coefficients(&scan, 0, 7).unwrap();
        assert!(w0.iter().all(|z| z.re >= 0.0 && z.im.abs() < 1e-15));
        assert!(matches!(fourier_coefficients(&scan, 0, 9), Err(TomoError::InsufficientPhases { .. })));
    }

    #[test]
    fn fock_five_exact_round_trip() {
        let rho = fock_state::<f64>(5, 7).unwrap().density();
        let design = build_design(0.3, 7, 12, 0.9).unwrap();
        let scan = scan_phase(&rho, 0.3, default_phases(7), 12, 0.9, Acquisition::exact(), false).unwrap();
        let rec = reconstruct_fock(&scan, &design, FockReconOptions::default()).unwrap();
        assert!(crate::scalar::max_abs_diff(&rec.rho.entries, &rho.entries) < 1e-6);
    }

    #[test]
    fn squeezed_exact_round_trip() {
        let n1 = 12;
        let rho = squeezed_coefficients(3f64.sqrt(), E, n1).unwrap().density();
        let design = build_design(1.1, n1, n1 + 5, 0.9).unwrap();
        let scan = scan_phase(&rho, 1.1, default_phases(n1), n1 + 5, 0.9, Acquisition::exact(), false).unwrap();
        let rec = reconstruct_fock(&scan, &design, FockReconOptions::default()).unwrap();
        let err = crate::scalar::max_abs_diff(&rec.rho.entries, &rho.entries);
        assert!(err < 1e-6, "max abs error {err}");
    }

    #[test]
    fn mismatched_scan_is_rejected() {
        let rho = fock_state::<f64>(1, 3).unwrap().density();
        let design = build_design(0.5, 3, 6, 1.0).unwrap();
        let scan = scan_phase(&rho, 0.6, 9, 6, 1.0, Acquisition::exact(), false).unwrap();
        assert!(matches!(
            reconstruct_fock(&scan, &design, FockReconOptions::default()),
            Err(TomoError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn inconsistent_trace_is_reported() {
        let rho = fock_state::<f64>(1, 3).unwrap().density();
        let design = build_design(0.5, 3, 6, 1.0).unwrap();
        let mut scan = scan_phase(&rho, 0.5, 9, 6, 1.0, Acquisition::exact(), false).unwrap();
        scan.probs.iter_mut().for_each(|r| r.iter_mut().for_each(|w| *w *= 0.5));
        assert!(matches!(
            reconstruct_fock(&scan, &design, FockReconOptions::default()),
            Err(TomoError::DataInconsistency(_))
        ));
    }

    #[test]
    fn truncation_selection_finds_support() {
        let rho = fock_state::<f64>(2, 6).unwrap().density();
        let scan = scan_phase(&rho, 0.4, 15, 10, 1.0, Acquisition::exact(), false).unwrap();
        assert_eq!(select_truncation(&scan, 6).unwrap(), 3);
    }

    #[test]
    fn analytic_errors_match_monte_carlo() {
        let rho = squeezed_coefficients(1.0f64, 2.0, 5).unwrap().density();
        let plan =
            ScanPlan { n1: 5, n_count: 9, k: 13, eta: 1.0, runs: Runs::Finite(20_000), noise: NoiseModel::Multinomial };
        let design = build_design(0.8, 5, 9, 1.0).unwrap();
        let exact = scan_phase(&rho, 0.8, 13, 9, 1.0, Acquisition::exact(), false).unwrap();
        let se = standard_errors(&exact.probs, &design, 20_000, NoiseModel::Multinomial);
        let seeds: Vec<u64> = (0..200).collect();
        let report = beta_tradeoff_report(&rho, plan, &[0.8], &seeds).unwrap();
        for e in &report.entries {
            let rel = (e.std_err - se[(e.row, e.col)]) / se[(e.row, e.col)];
            assert!(rel.abs() < 0.25, "({}, {}): MC {} vs analytic {}", e.row, e.col, e.std_err, se[(e.row, e.col)]);
        }
    }
}
