use std::f64::consts::{PI, TAU};

use approx::assert_abs_diff_eq;
use bectomo::oracles;
use bectomo::specfun::{
    hermite, laguerre_assoc, small_d_matrix, wigner_3j, wigner_d_matrix, wigner_d_small, EulerAngles, HalfInt,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

mod common;

fn spins(max_twice: i32) -> impl Iterator<Item = HalfInt> {
    (0..=max_twice).map(HalfInt::from_doubled)
}

#[test]
fn rotation_matrix_matches_exponential_of_generators() {
    let mut rng = common::rng(11);
    for j in spins(10) {
        for _ in 0..3 {
            let (psi, theta, phi) = (rng.random_range(0.0..TAU), rng.random_range(0.0..PI), rng.random_range(0.0..TAU));
            let fast = wigner_d_matrix(j, EulerAngles::new(psi, theta, phi)).unwrap();
            let slow = oracles::euler_rotation(j, psi, theta, phi);
            let err = common::max_abs(&fast.entries, &slow);
            assert!(err < 1e-10, "j = {j}: {err}");
        }
    }
}

#[test]
fn spin_half_rotation_about_tilted_axis() {
    // exp(-i theta J.u) with u at azimuth phi equals D(phi - pi/2, theta, pi/2 - phi)
    let j = HalfInt::HALF;
    for &(theta, phi) in &[(0.4, 0.0), (1.3, 0.7), (2.9, 4.0)] {
        let axis = oracles::axis_rotation(j, theta, phi);
        let euler = std::f64::consts::FRAC_PI_2;
        let d = wigner_d_matrix(j, EulerAngles::new(phi - euler, theta, euler - phi)).unwrap();
        assert!(common::max_abs(&d.entries, &axis) < 1e-12);
    }
}

#[test]
fn rotation_matrices_are_unitary() {
    let mut rng = common::rng(5);
    for j in spins(10) {
        let e = EulerAngles::new(rng.random_range(0.0..6.0), rng.random_range(0.0..3.0), rng.random_range(0.0..6.0));
        let d = wigner_d_matrix(j, e).unwrap().entries;
        let prod = &d * d.adjoint();
        let eye = nalgebra::DMatrix::identity(j.dim(), j.dim());
        assert!((prod - eye).norm() < 1e-12);
    }
}

#[test]
fn small_d_closed_forms() {
    for &t in &[0.0, 0.3, 1.7, 3.1] {
        let c = oracles::euler_rotation(HalfInt::HALF, 0.0, t, 0.0);
        assert_abs_diff_eq!(
            wigner_d_small(HalfInt::HALF, HalfInt::HALF, HalfInt::HALF, t).unwrap(),
            c[(1, 1)].re,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            wigner_d_small(HalfInt::int(1), HalfInt::ZERO, HalfInt::ZERO, t).unwrap(),
            f64::cos(t),
            epsilon = 1e-14
        );
    }
}

#[test]
fn small_d_symmetry() {
    for j in spins(12) {
        for &t in &[0.2, 1.1, 2.5] {
            let d = small_d_matrix::<f64>(j, t);
            for (a, mp) in j.projections().enumerate() {
                for (b, m) in j.projections().enumerate() {
                    let sign = if ((mp - m).twice() / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                    assert_abs_diff_eq!(d[(a, b)], sign * d[(b, a)], epsilon = 1e-12);
                }
            }
        }
    }
}

#[test]
fn three_j_matches_lowering_construction() {
    for j1 in spins(8) {
        for j2 in spins(8) {
            let lo = (j1.twice() - j2.twice()).abs();
            for tj3 in (lo..=j1.twice() + j2.twice()).step_by(2) {
                let j3 = HalfInt::from_doubled(tj3);
                for m1 in j1.projections() {
                    for m2 in j2.projections() {
                        let m3 = -(m1 + m2);
                        if m3.twice().abs() > tj3 {
                            continue;
                        }
                        let fast: f64 = wigner_3j(j1, j2, j3, m1, m2, m3).unwrap();
                        let slow = oracles::three_j(j1, j2, j3, m1, m2, m3);
                        assert!((fast - slow).abs() < 1e-10, "({j1} {j2} {j3}; {m1} {m2} {m3}): {fast} vs {slow}");
                    }
                }
            }
        }
    }
}

#[test]
fn three_j_orthogonality() {
    for j1 in spins(8) {
        for j2 in spins(8) {
            let lo = (j1.twice() - j2.twice()).abs();
            let hi = j1.twice() + j2.twice();
            for ta in (lo..=hi).step_by(2) {
                for tb in (lo..=hi).step_by(2) {
                    let (ja, jb) = (HalfInt::from_doubled(ta), HalfInt::from_doubled(tb));
                    for ma in ja.projections() {
                        for mb in jb.projections() {
                            let mut sum = 0.0;
                            for m1 in j1.projections() {
                                for m2 in j2.projections() {
                                    let a: f64 = wigner_3j(j1, j2, ja, m1, m2, ma).unwrap();
                                    let b: f64 = wigner_3j(j1, j2, jb, m1, m2, mb).unwrap();
                                    sum += a * b;
                                }
                            }
                            sum *= (ta + 1) as f64;
                            let expect = if ta == tb && ma == mb { 1.0 } else { 0.0 };
                            assert!((sum - expect).abs() < 1e-10, "{j1} {j2} {ja} {jb} {ma} {mb}: {sum}");
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn three_j_with_zero_coupling() {
    for j in spins(10) {
        for m in j.projections() {
            let v: f64 = wigner_3j(j, j, HalfInt::ZERO, m, -m, HalfInt::ZERO).unwrap();
            let sign = if ((j - m).twice() / 2) % 2 == 0 { 1.0 } else { -1.0 };
            assert_abs_diff_eq!(v, sign / ((j.twice() + 1) as f64).sqrt(), epsilon = 1e-13);
        }
    }
}

fn rational(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap()
}

fn big_factorial(n: usize) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Exact `L_n^(a)(x)` from the explicit sum, valid for every integer `a`
/// with `n + a >= 0` through `C(n + a, n - k) = (n + a)! / ((n - k)! (a + k)!)`,
/// where terms with `a + k < 0` vanish.
fn laguerre_exact(n: usize, a: i64, x: &BigRational) -> BigRational {
    let top = big_factorial((n as i64 + a) as usize);
    let mut sum = BigRational::zero();
    let mut xk = BigRational::one();
    for k in 0..=n {
        if a + k as i64 >= 0 {
            let denom = big_factorial(n - k) * big_factorial((a + k as i64) as usize) * big_factorial(k);
            let term = BigRational::new(top.clone(), denom) * &xk;
            if k % 2 == 0 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        xk *= x;
    }
    sum
}

#[test]
fn laguerre_recurrence_matches_series() {
    for n in 0..=30usize {
        for a in -(n as i64)..=(n as i64) {
            for &x in &[0.0, 0.5, 3.0, 11.0, 25.0] {
                let fast: f64 = laguerre_assoc(n, a, x).unwrap();
                let exact = laguerre_exact(n, a, &rational(x)).to_f64().unwrap();
                let scale = exact.abs().max(1.0);
                assert!((fast - exact).abs() <= 1e-10 * scale, "L_{n}^({a})({x}): {fast} vs {exact}");
            }
        }
    }
}

#[test]
fn laguerre_float_series_agrees_where_well_conditioned() {
    for n in 0..=12usize {
        for a in 0..=6usize {
            let x = 0.7;
            let exact = laguerre_exact(n, a as i64, &rational(x)).to_f64().unwrap();
            assert!((oracles::laguerre_series(n, a, x) - exact).abs() < 1e-12 * exact.abs().max(1.0));
        }
    }
}

#[test]
fn laguerre_lowest_reflection() {
    let mut fact = 1.0;
    for n in 0..=6usize {
        if n > 0 {
            fact *= n as f64;
        }
        for &x in &[0.3, 1.0, 4.5] {
            let v: f64 = laguerre_assoc(n, -(n as i64), x).unwrap();
            assert_abs_diff_eq!(v, (-x).powi(n as i32) / fact, epsilon = 1e-12 * (x.powi(n as i32) / fact).max(1.0));
        }
    }
}

#[test]
fn hermite_matches_series() {
    for n in 0..=20 {
        for &x in &[-2.0, -0.3, 0.0, 0.5, 1.7] {
            let fast: f64 = hermite(n, x).unwrap();
            let slow = oracles::hermite_series(n, x);
            assert!((fast - slow).abs() <= 1e-11 * slow.abs().max(1.0), "H_{n}({x})");
        }
    }
}
