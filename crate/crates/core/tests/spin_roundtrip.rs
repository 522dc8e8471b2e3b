use std::f64::consts::{E, PI};

use bectomo::forward::{scan_spin, spin_marginal_exact, Acquisition, NoiseModel, Runs};
use bectomo::oracles;
use bectomo::spin_tomo::{condition_report, gauss_legendre, reconstruct_spin, QuadratureGrid, SpinReconOptions};
use bectomo::states::{two_mode_spin_squeezed, Basis, DensityMatrix};
use bectomo::{HalfInt, TomoError};
use num_complex::Complex64;

mod common;

fn round_trip(rho: &DensityMatrix<f64>, grid: &QuadratureGrid<f64>) -> f64 {
    let data = scan_spin(rho, &grid.settings(), Acquisition::exact()).unwrap();
    let rec = reconstruct_spin(&data, grid, SpinReconOptions::default()).unwrap();
    common::max_abs(&rec.rho.entries, &rho.entries)
}

#[test]
fn random_states_round_trip_up_to_spin_five() {
    for two_j in 1..=10 {
        let j = HalfInt::from_doubled(two_j);
        let grid = QuadratureGrid::exact_for(j);
        for seed in 0..3 {
            let rho = common::random_density(Basis::Spin { j }, 1000 * two_j as u64 + seed);
            let err = round_trip(&rho, &grid);
            assert!(err < 1e-8, "j = {j}, seed {seed}: {err}");
        }
    }
}

#[test]
fn spin_half_basis_state_is_exact() {
    let j = HalfInt::HALF;
    let rho = bectomo::states::spin_basis_state::<f64>(j, j).unwrap().density();
    assert!(round_trip(&rho, &QuadratureGrid::exact_for(j)) < 1e-10);
}

#[test]
fn two_mode_squeezed_state_on_a_wide_grid() {
    let rho = two_mode_spin_squeezed(5f64.sqrt(), E, 10).unwrap().density();
    let grid = QuadratureGrid::new(21, 21).unwrap();
    assert!(round_trip(&rho, &grid) < 1e-8);
}

#[test]
fn uniform_marginals_give_the_mixed_state() {
    let j = HalfInt::int(3);
    let grid = QuadratureGrid::<f64>::exact_for(j);
    let rho = DensityMatrix::maximally_mixed(Basis::Spin { j });
    assert!(round_trip(&rho, &grid) < 1e-12);
}

#[test]
fn reconstruction_is_linear_in_the_data() {
    let j = HalfInt::from_doubled(3);
    let grid = QuadratureGrid::<f64>::exact_for(j);
    let settings = grid.settings();
    let acq = Acquisition { runs: Runs::Finite(500), seed: 4, noise: NoiseModel::Multinomial };
    let d1 = scan_spin(&common::random_density(Basis::Spin { j }, 1), &settings, acq).unwrap();
    let d2 = scan_spin(&common::random_density(Basis::Spin { j }, 2), &settings, acq).unwrap();
    let alpha = 0.3;
    let mut mix = d1.clone();
    for (row, (a, b)) in mix.probs.iter_mut().zip(d1.probs.iter().zip(&d2.probs)) {
        for (v, (x, y)) in row.iter_mut().zip(a.iter().zip(b)) {
            *v = alpha * x + (1.0 - alpha) * y;
        }
    }
    let raw = |d: &bectomo::forward::SpinMarginalSet<f64>| {
        let probs: Vec<Vec<Complex64>> =
            d.probs.iter().map(|r| r.iter().map(|&w| Complex64::new(w, 0.0)).collect()).collect();
        bectomo::spin_tomo::invert_marginals(j, &grid, &probs).unwrap()
    };
    let expect = raw(&d1) * Complex64::new(alpha, 0.0) + raw(&d2) * Complex64::new(1.0 - alpha, 0.0);
    assert!(common::max_abs(&raw(&mix), &expect) < 1e-10);
}

/// Direct evaluation of the inversion integral over all three Euler angles,
/// with rotation matrices from matrix exponentials and coupling symbols from
/// the lowering construction.
fn brute_force_inversion(rho: &DensityMatrix<f64>, j: HalfInt, k_psi: usize) -> oracles::CM {
    let dim = j.dim();
    let n_theta = j.twice() as usize + 1;
    let k_phi = 2 * j.twice() as usize + 1;
    let (x, wts) = gauss_legendre(n_theta);
    let mut out = oracles::CM::zeros(dim, dim);
    let max_jp = j.twice();
    for (a, ma) in j.projections().enumerate() {
        for (b, mb) in j.projections().enumerate() {
            let mp = mb - ma;
            let mut acc = Complex64::new(0.0, 0.0);
            for jp in 0..=max_jp {
                let jp_h = HalfInt::int(jp);
                if mp.twice().abs() > 2 * jp {
                    continue;
                }
                let w_ab = oracles::three_j(j, j, jp_h, ma, -mb, mp);
                for (mi, m) in j.projections().enumerate() {
                    let w_m = oracles::three_j(j, j, jp_h, m, -m, HalfInt::ZERO);
                    let sign = if ((m - mb).twice() / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    let mut integral = Complex64::new(0.0, 0.0);
                    for (ti, &c) in x.iter().enumerate() {
                        let theta = c.acos();
                        for kp in 0..k_phi {
                            let phi = 2.0 * PI * kp as f64 / k_phi as f64;
                            let setting = bectomo::forward::RotationSetting::new(theta, phi).unwrap();
                            let w = spin_marginal_exact(rho, setting).unwrap()[mi];
                            for ks in 0..k_psi {
                                let psi = 2.0 * PI * ks as f64 / k_psi as f64;
                                let d = oracles::euler_rotation(jp_h, psi, theta, phi);
                                let el = d[(jp_h.index_of(HalfInt::ZERO), jp_h.index_of(mp))];
                                integral += el * w * wts[ti];
                            }
                        }
                    }
                    // (1 / 8 pi^2) (2 pi / K_psi) (2 pi / K_phi) and GL weights in cos(theta)
                    integral /= 2.0 * (k_psi * k_phi) as f64;
                    acc += integral * (((2 * jp + 1) * (2 * jp + 1)) as f64 * sign * w_m * w_ab);
                }
            }
            out[(a, b)] = acc;
        }
    }
    out
}

#[test]
fn analytic_psi_elimination_matches_explicit_psi_quadrature() {
    for two_j in 1..=4 {
        let j = HalfInt::from_doubled(two_j);
        let rho = common::random_density(Basis::Spin { j }, 77 + two_j as u64);
        let grid = QuadratureGrid::exact_for(j);
        let data = scan_spin(&rho, &grid.settings(), Acquisition::exact()).unwrap();
        let fast = reconstruct_spin(&data, &grid, SpinReconOptions::default()).unwrap().rho.entries;
        for k_psi in [2, 3] {
            let slow = brute_force_inversion(&rho, j, k_psi);
            let err = common::max_abs(&fast, &slow);
            assert!(err < 1e-10, "j = {j}, K_psi = {k_psi}: {err}");
        }
    }
}

#[test]
fn aliasing_on_a_coarse_azimuthal_grid() {
    let j = HalfInt::int(5);
    let coarse = QuadratureGrid::<f64>::new(11, 5).unwrap();
    assert!(condition_report(j, &coarse).unwrap().worst_error > 1e-3);
    let fine = QuadratureGrid::<f64>::exact_for(HalfInt::HALF);
    assert!(condition_report(HalfInt::HALF, &fine).unwrap().worst_error < 1e-10);
    let rho = common::random_density(Basis::Spin { j }, 9);
    let data = scan_spin(&rho, &coarse.settings(), Acquisition::exact()).unwrap();
    assert!(matches!(
        reconstruct_spin(&data, &coarse, SpinReconOptions::default()),
        Err(TomoError::GridTooCoarse { .. })
    ));
}

#[test]
fn reconstruction_is_independent_of_thread_count() {
    let j = HalfInt::int(4);
    let grid = QuadratureGrid::<f64>::exact_for(j);
    let rho = common::random_density(Basis::Spin { j }, 12);
    let acq = Acquisition { runs: Runs::Finite(3000), seed: 1, noise: NoiseModel::Gaussian { width: 1.0 } };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let data = scan_spin(&rho, &grid.settings(), acq).unwrap();
            reconstruct_spin(&data, &grid, SpinReconOptions::default()).unwrap().rho.entries
        })
    };
    assert_eq!(run(1), run(4));
}
