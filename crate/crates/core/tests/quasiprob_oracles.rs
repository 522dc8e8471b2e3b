use std::f64::consts::{E, PI};

use approx::assert_abs_diff_eq;
use bectomo::oracles;
use bectomo::quasiprob::{fidelity, q_plane, q_sphere, wigner_plane, PlaneGrid, SphereGrid};
use bectomo::states::{fock_state, squeezed_coefficients, two_mode_spin_squeezed, Basis, DensityMatrix};
use bectomo::HalfInt;
use num_complex::Complex64;

mod common;

#[test]
fn squeezed_q_peak_matches_direct_sum() {
    let v = squeezed_coefficients(3f64.sqrt(), E, 24).unwrap();
    let rho = v.density();
    let grid = PlaneGrid::default();
    let q = q_plane(&rho, &grid).unwrap();
    let (mut best, mut at) = (f64::MIN, (0, 0));
    for i in 0..grid.re.count {
        for k in 0..grid.im.count {
            if q.values[(i, k)] > best {
                best = q.values[(i, k)];
                at = (i, k);
            }
        }
    }
    let alpha = Complex64::new(grid.re.value(at.0), grid.im.value(at.1));
    // exp(-|alpha|^2) |sum (alpha^*)^n / sqrt(n!) c_n|^2
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 0..=24 {
        if n > 0 {
            term *= alpha.conj() / (n as f64).sqrt();
        }
        sum += term * v.amplitudes[n];
    }
    let direct = (-alpha.norm_sqr()).exp() * sum.norm_sqr();
    assert_abs_diff_eq!(best, direct, epsilon = 1e-13);
    assert!(q.max() <= 1.0 + 1e-9 && q.min() >= -1e-15);
}

#[test]
fn squeezed_wigner_matches_characteristic_function_quadrature() {
    let rho = squeezed_coefficients(3f64.sqrt(), E, 24).unwrap().density();
    let probes = [
        Complex64::new(0.0, 0.0),
        Complex64::new(1.2, 0.0),
        Complex64::new(1.7, 0.3),
        Complex64::new(-0.4, 0.8),
        Complex64::new(2.5, -0.6),
    ];
    let slow = oracles::characteristic_wigner(&rho.entries, &probes, 12.0, 241);
    for (p, s) in probes.iter().zip(&slow) {
        let grid = PlaneGrid {
            re: bectomo::quasiprob::GridAxis { start: p.re, step: 0.0, count: 1 },
            im: bectomo::quasiprob::GridAxis { start: p.im, step: 0.0, count: 1 },
        };
        let fast = wigner_plane(&rho, &grid).unwrap().values[(0, 0)];
        assert!((fast - s).abs() < 1e-8, "W({p}) = {fast} vs {s}");
    }
}

#[test]
fn fock_wigner_is_negative_at_the_origin_and_real_everywhere() {
    let rho = fock_state::<f64>(5, 7).unwrap().density();
    let w = wigner_plane(&rho, &PlaneGrid::default()).unwrap();
    assert_abs_diff_eq!(w.nearest(0.0, 0.0), -2.0 / PI, epsilon = 1e-12);
    assert!(w.imag_residue < 1e-12);
    assert!(w.min() >= -2.0 / PI - 1e-9 && w.max() <= 2.0 / PI + 1e-9);
    assert_abs_diff_eq!(w.normalization(HalfInt::ZERO), 1.0, epsilon = 1e-2);
}

#[test]
fn sphere_normalization_for_the_two_mode_state() {
    let rho = two_mode_spin_squeezed(5f64.sqrt(), E, 10).unwrap().density();
    let q = q_sphere(&rho, &SphereGrid::default()).unwrap();
    assert_abs_diff_eq!(q.normalization(HalfInt::int(5)), 1.0, epsilon = 1e-2);
    assert!(q.max() <= 1.0 + 1e-9 && q.min() >= -1e-12);
}

#[test]
fn mixed_spin_state_has_flat_q() {
    // resolution of identity: ((2j+1)/4pi) integral |theta,phi><theta,phi| = I
    let j = HalfInt::from_doubled(7);
    let rho = DensityMatrix::<f64>::maximally_mixed(Basis::Spin { j });
    let q = q_sphere(&rho, &SphereGrid::new(31, 40)).unwrap();
    assert!(q.values.iter().all(|&v| (v - 1.0 / 8.0).abs() < 1e-13));
}

#[test]
fn fidelity_of_pure_pairs_is_the_overlap() {
    for seed in 0..10 {
        let a = common::random_unit_vector(6, 2 * seed);
        let b = common::random_unit_vector(6, 2 * seed + 1);
        let basis = Basis::Fock { n_trunc: 5 };
        let ra = DensityMatrix::from_raw(basis, &a * a.adjoint());
        let rb = DensityMatrix::from_raw(basis, &b * b.adjoint());
        let overlap = a.dotc(&b).norm_sqr();
        assert_abs_diff_eq!(fidelity(&ra, &rb).unwrap(), overlap, epsilon = 1e-7);
    }
    for seed in 0..5 {
        let psi = common::random_unit_vector(5, 50 + seed);
        let basis = Basis::Fock { n_trunc: 4 };
        let pure = DensityMatrix::from_raw(basis, &psi * psi.adjoint());
        let mixed = common::random_density(basis, 60 + seed);
        let expect = (psi.adjoint() * &mixed.entries * &psi)[(0, 0)].re;
        assert_abs_diff_eq!(fidelity(&pure, &mixed).unwrap(), expect, epsilon = 1e-7);
    }
}
