use std::f64::consts::E;

use approx::assert_abs_diff_eq;
use bectomo::oracles;
use bectomo::specfun::{wigner_d_matrix, EulerAngles};
use bectomo::states::{
    atomic_coherent_amplitudes, fock_state, squeezed_coefficients, squeezed_mean_number, squeezed_raw,
    two_mode_spin_squeezed, Basis, DensityMatrix, DensityTolerance,
};
use bectomo::HalfInt;
use nalgebra::DMatrix;

mod common;

#[test]
fn coherent_amplitudes_are_a_column_of_the_rotation_matrix() {
    // The amplitudes carry e^{-i m phi}, which belongs to the first Euler
    // angle, and the sign pattern of sin^(j+m) cos^(j-m) is that of a
    // rotation by -theta: they equal D_{m,-j}(phi, -theta, 0).
    for two_j in 0..=10 {
        let j = HalfInt::from_doubled(two_j);
        for &(theta, phi) in &[(0.3, 0.2), (1.7, 4.1), (2.9, 5.9)] {
            let v = atomic_coherent_amplitudes(j, theta, phi).unwrap();
            let d = wigner_d_matrix(j, EulerAngles::new(phi, -theta, 0.0)).unwrap();
            for (i, m) in j.projections().enumerate() {
                let diff = (v.amplitudes[i] - d.get(m, -j)).norm();
                assert!(diff < 1e-12, "j = {j}, m = {m}: {diff}");
            }
        }
    }
}

#[test]
fn coherent_amplitudes_have_unit_norm() {
    for two_j in 0..=10 {
        let j = HalfInt::from_doubled(two_j);
        let v = atomic_coherent_amplitudes(j, 1.234, 0.77).unwrap();
        assert_abs_diff_eq!(v.amplitudes.norm(), 1.0, epsilon = 1e-13);
    }
}

#[test]
fn squeezed_vacuum_has_even_support() {
    for &r in &[2.0, E, 5.0] {
        let v = squeezed_coefficients(0.0, r, 30).unwrap();
        for n in (1..=30).step_by(2) {
            assert_eq!(v.amplitudes[n].norm(), 0.0);
        }
    }
}

#[test]
fn squeezed_coefficients_match_hermite_form() {
    // c_n ∝ (1/sqrt(2^n n!)) ((r-1)/(r+1))^{n/2} H_n(x0 sqrt(2 r^2 / (r^2 - 1)))
    // checked away from the r = 1 singularity with an independent Hermite sum
    let (x0, r) = (3f64.sqrt(), E);
    let raw = squeezed_raw(x0, r, 20).unwrap();
    let arg = x0 * (2.0 * r * r / (r * r - 1.0)).sqrt();
    let ratio = ((r - 1.0) / (r + 1.0)).sqrt();
    let mut fact = 1.0;
    let reference: Vec<f64> = (0..=20)
        .map(|n| {
            if n > 0 {
                fact *= n as f64;
            }
            ratio.powi(n as i32) * oracles::hermite_series(n, arg) / (2f64.powi(n as i32) * fact).sqrt()
        })
        .collect();
    let scale = raw[0] / reference[0];
    for n in 0..=20 {
        assert!((raw[n] - scale * reference[n]).abs() < 1e-12 * raw[0].abs(), "n = {n}");
    }
}

#[test]
fn squeezed_truncation_tails() {
    let v = squeezed_coefficients(5f64.sqrt(), E, 40).unwrap();
    assert!(v.norm_deficit < 1e-6);
    let mean: f64 = squeezed_mean_number(3f64.sqrt(), E).unwrap();
    // x0^2 + (r - 1)^2 / (4 r) from the Gaussian moments; the summed value
    // stops at the default truncation, which leaves a tail of order 1e-8
    assert_abs_diff_eq!(mean, 3.0 + (E - 1.0).powi(2) / (4.0 * E), epsilon = 1e-6);
}

#[test]
fn two_mode_states_are_normalized() {
    let mut rng = common::rng(2);
    use rand::Rng;
    for _ in 0..20 {
        let x0: f64 = rng.random_range(0.0..1.5);
        let r: f64 = rng.random_range(0.5..3.0);
        let n_atoms = rng.random_range(6..20);
        let v = two_mode_spin_squeezed(x0, r, n_atoms).unwrap();
        assert_eq!(v.amplitudes.len(), n_atoms + 1);
        assert_abs_diff_eq!(v.amplitudes.norm(), 1.0, epsilon = 1e-12);
    }
    let fig1 = two_mode_spin_squeezed(5f64.sqrt(), E, 10).unwrap();
    assert_eq!(fig1.j, HalfInt::int(5));
}

#[test]
fn projectors_are_rank_one_density_matrices() {
    for seed in 0..5 {
        let psi = common::random_unit_vector(7, seed);
        let rho = DensityMatrix::new(Basis::Fock { n_trunc: 6 }, &psi * psi.adjoint()).unwrap();
        rho.check(DensityTolerance::default()).unwrap();
        let herm = (&rho.entries + rho.entries.adjoint()) * num_complex::Complex64::new(0.5, 0.0);
        let real = DMatrix::from_fn(14, 14, |r, c| {
            let (i, k) = (r % 7, c % 7);
            let z = herm[(i, k)];
            match (r < 7, c < 7) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        let top = oracles::largest_singular_value(&real, 200);
        assert_abs_diff_eq!(top, 1.0, epsilon = 1e-10);
    }
    let single = fock_state::<f64>(0, 2).unwrap().density();
    assert_eq!(single.entries.iter().filter(|z| z.norm() > 0.0).count(), 1);
}
