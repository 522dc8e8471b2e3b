//! Independent reference implementations in `f64`.
//!
//! These routines deliberately avoid the closed forms used by the library:
//! rotations come from matrix exponentials of ladder operators, coupling
//! coefficients from explicit lowering, beam splitters from exponentials of
//! the two-mode hopping generator, and the Wigner function from a quadrature
//! over the characteristic function. They are slow and exist to check the
//! fast paths.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::specfun::HalfInt;

pub type CM = DMatrix<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn one_norm(a: &CM) -> f64 {
    (0..a.ncols()).map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring around a Taylor series.
pub fn expm(a: &CM) -> CM {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = a / c(2f64.powi(squarings as i32));
    let mut term = CM::identity(n, n);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * &scaled / c(k as f64);
        sum += &term;
        if one_norm(&term) < 1e-18 * one_norm(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `(J_x, J_y, J_z)` for spin `j`, basis index `i` holding `m = -j + i`.
pub fn spin_operators(j: HalfInt) -> (CM, CM, CM) {
    let d = j.dim();
    let jj = j.as_f64();
    let mut jp = CM::zeros(d, d);
    let mut jz = CM::zeros(d, d);
    for i in 0..d {
        let m = -jj + i as f64;
        jz[(i, i)] = c(m);
        if i + 1 < d {
            jp[(i + 1, i)] = c((jj * (jj + 1.0) - m * (m + 1.0)).sqrt());
        }
    }
    let jm = jp.adjoint();
    let jx = (&jp + &jm) * c(0.5);
    let jy = (&jp - &jm) * Complex64::new(0.0, -0.5);
    (jx, jy, jz)
}

/// `exp(-i psi J_z) exp(-i theta J_y) exp(-i phi J_z)`.
pub fn euler_rotation(j: HalfInt, psi: f64, theta: f64, phi: f64) -> CM {
    let (_, jy, jz) = spin_operators(j);
    let mi = Complex64::new(0.0, -1.0);
    expm(&(&jz * (mi * psi))) * expm(&(&jy * (mi * theta))) * expm(&(&jz * (mi * phi)))
}

/// `exp(-i theta (J_x cos(phi) + J_y sin(phi)))`.
pub fn axis_rotation(j: HalfInt, theta: f64, phi: f64) -> CM {
    let (jx, jy, _) = spin_operators(j);
    let gen = jx * c(phi.cos()) + jy * c(phi.sin());
    expm(&(gen * Complex64::new(0.0, -theta)))
}

/// Clebsch-Gordan coefficient `<j1 m1; j2 m2 | jt mt>` by lowering the
/// highest-weight state of `jt` in `j1 x j2`.
pub fn clebsch_gordan(j1: HalfInt, m1: HalfInt, j2: HalfInt, m2: HalfInt, jt: HalfInt, mt: HalfInt) -> f64 {
    if m1 + m2 != mt || jt.twice() > j1.twice() + j2.twice() || jt.twice() < (j1.twice() - j2.twice()).abs() {
        return 0.0;
    }
    if (j1.twice() + j2.twice() + jt.twice()) % 2 != 0 || mt.twice().abs() > jt.twice() {
        return 0.0;
    }
    let (d1, d2) = (j1.dim(), j2.dim());
    let idx = |a: usize, b: usize| a * d2 + b;
    let (x1, y1, _) = spin_operators(j1);
    let (x2, y2, _) = spin_operators(j2);
    let i = Complex64::new(0.0, 1.0);
    let jp1 = &x1 + &y1 * i;
    let jp2 = &x2 + &y2 * i;
    let eye1 = CM::identity(d1, d1);
    let eye2 = CM::identity(d2, d2);
    let jp = jp1.kronecker(&eye2) + eye1.kronecker(&jp2);
    let jm = jp.adjoint();

    // uncoupled states with total projection jt
    let top: Vec<usize> = (0..d1)
        .flat_map(|a| (0..d2).map(move |b| (a, b)))
        .filter(|&(a, b)| j1.projection_at(a) + j2.projection_at(b) == jt)
        .map(|(a, b)| idx(a, b))
        .collect();
    let restricted = DMatrix::from_fn(d1 * d2, top.len(), |r, k| jp[(r, top[k])].re);
    let svd = restricted.svd(false, true);
    let v_t = svd.v_t.unwrap();
    let (kmin, _) =
        svd.singular_values
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, &s)| if s < acc.1 { (k, s) } else { acc });
    let mut state = nalgebra::DVector::<Complex64>::zeros(d1 * d2);
    for (k, &t) in top.iter().enumerate() {
        state[t] = c(v_t[(kmin, k)]);
    }
    // Condon-Shortley phase: the coefficient with m1 = j1 is positive
    let anchor = idx(d1 - 1, j2.index_of(jt - j1));
    if state[anchor].re < 0.0 {
        state = -state;
    }
    let jtf = jt.as_f64();
    let mut m = jtf;
    while m > mt.as_f64() + 1e-9 {
        state = &jm * state / c((jtf * (jtf + 1.0) - m * (m - 1.0)).sqrt());
        m -= 1.0;
    }
    state[idx(j1.index_of(m1), j2.index_of(m2))].re
}

/// Wigner 3j symbol from [`clebsch_gordan`].
pub fn three_j(j1: HalfInt, j2: HalfInt, j3: HalfInt, m1: HalfInt, m2: HalfInt, m3: HalfInt) -> f64 {
    let phase_doubled = j1.twice() - j2.twice() - m3.twice();
    let sign = if (phase_doubled / 2).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    sign / ((j3.twice() + 1) as f64).sqrt() * clebsch_gordan(j1, m1, j2, m2, j3, -m3)
}

/// Physicists' Hermite polynomial from its explicit sum.
pub fn hermite_series(n: usize, x: f64) -> f64 {
    (0..=n / 2)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * factorial(n) / (factorial(k) * factorial(n - 2 * k)) * (2.0 * x).powi((n - 2 * k) as i32)
        })
        .sum()
}

/// Associated Laguerre polynomial `L_n^(a)` for integer `a >= 0` from its
/// explicit sum.
pub fn laguerre_series(n: usize, a: usize, x: f64) -> f64 {
    (0..=n)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * factorial(n + a) / (factorial(n - k) * factorial(a + k) * factorial(k)) * x.powi(k as i32)
        })
        .sum()
}

/// Unitary of a lossless beam splitter on the block of `n_tot` atoms,
/// `exp(-i (theta/2) (b1^dag b2 e^{-i phi} + h.c.))`, in the basis
/// `|n1, n_tot - n1>` indexed by `n1`.
pub fn beam_splitter_block(theta: f64, phi: f64, n_tot: usize) -> CM {
    let d = n_tot + 1;
    let mut h = CM::zeros(d, d);
    for n1 in 0..n_tot {
        let n2 = n_tot - n1;
        // b1^dag b2 |n1, n2> = sqrt((n1 + 1) n2) |n1 + 1, n2 - 1>
        let amp = ((n1 + 1) as f64 * n2 as f64).sqrt();
        h[(n1 + 1, n1)] = Complex64::from_polar(amp, -phi);
        h[(n1, n1 + 1)] = Complex64::from_polar(amp, phi);
    }
    expm(&(h * Complex64::new(0.0, -theta / 2.0)))
}

/// Output distribution of `n1 - n2` for a two-mode state with fixed total
/// number, given in the `|n1, N - n1>` basis, after [`beam_splitter_block`].
/// The result is indexed by `n1`.
pub fn beam_splitter_difference(rho: &CM, theta: f64, phi: f64) -> Vec<f64> {
    let n_tot = rho.nrows() - 1;
    let u = beam_splitter_block(theta, phi, n_tot);
    let out = &u * rho * u.adjoint();
    (0..=n_tot).map(|i| out[(i, i)].re).collect()
}

/// Truncation of the reference mode used by [`beam_splitter_with_reference`].
pub fn reference_truncation(beta: f64) -> usize {
    40usize.max((beta * beta + 8.0 * beta + 10.0).ceil() as usize)
}

/// Count distributions of both output ports when `rho` (Fock basis) meets a
/// coherent reference `|beta_bar>` on a beam splitter with angle `theta` and
/// phase `phi`. Returns `(port 1, port 2)`, each over `0..=n_max`.
pub fn beam_splitter_with_reference(
    rho: &CM,
    beta_bar: Complex64,
    theta: f64,
    phi: f64,
    n_max: usize,
) -> (Vec<f64>, Vec<f64>) {
    let n1_max = rho.nrows() - 1;
    let m2 = reference_truncation(beta_bar.norm());
    let mut coh = vec![Complex64::new((-0.5 * beta_bar.norm_sqr()).exp(), 0.0); m2 + 1];
    for k in 1..=m2 {
        coh[k] = coh[k - 1] * beta_bar / (k as f64).sqrt();
    }
    let mut p1 = vec![0.0; n_max + 1];
    let mut p2 = vec![0.0; n_max + 1];
    for n_tot in 0..=(n1_max + m2) {
        // input block: a = n1 in 0..=min(n1_max, n_tot) with n2 = n_tot - a <= m2
        let d = n_tot + 1;
        let mut blk = CM::zeros(d, d);
        let mut any = false;
        for a in 0..=n1_max.min(n_tot) {
            if n_tot - a > m2 {
                continue;
            }
            for b in 0..=n1_max.min(n_tot) {
                if n_tot - b > m2 {
                    continue;
                }
                blk[(a, b)] = rho[(a, b)] * coh[n_tot - a] * coh[n_tot - b].conj();
                any = true;
            }
        }
        if !any {
            continue;
        }
        let u = beam_splitter_block(theta, phi, n_tot);
        let out = &u * blk * u.adjoint();
        for n1 in 0..=n_tot {
            let p = out[(n1, n1)].re;
            if n1 <= n_max {
                p1[n1] += p;
            }
            if n_tot - n1 <= n_max {
                p2[n_tot - n1] += p;
            }
        }
    }
    (p1, p2)
}

/// Largest singular value by power iteration on `A^T A`.
pub fn largest_singular_value(a: &DMatrix<f64>, iterations: usize) -> f64 {
    let ata = a.transpose() * a;
    let mut v = nalgebra::DVector::from_element(ata.ncols(), 1.0);
    let mut lambda = 0.0;
    for _ in 0..iterations {
        let w = &ata * &v;
        lambda = w.norm();
        if lambda == 0.0 {
            return 0.0;
        }
        v = w / lambda;
    }
    lambda.sqrt()
}

/// `(1/2pi) integral_0^{2pi} f(phi) e^{i s phi} dphi` by the midpoint rule
/// with `samples` nodes.
pub fn dense_fourier<F: Fn(f64) -> f64>(f: F, s: i64, samples: usize) -> Complex64 {
    let h = std::f64::consts::TAU / samples as f64;
    (0..samples)
        .map(|k| {
            let phi = (k as f64 + 0.5) * h;
            Complex64::from_polar(f(phi), s as f64 * phi)
        })
        .sum::<Complex64>()
        / samples as f64
}

/// Symmetric characteristic function `Tr[rho D(xi)]` from the normally
/// ordered product `D(xi) = e^{-|xi|^2/2} e^{xi a^dag} e^{-xi^* a}`.
pub fn characteristic(rho: &CM, xi: Complex64) -> Complex64 {
    let d = rho.nrows();
    let mut pow_xi = vec![c(1.0); d];
    let mut pow_mxc = vec![c(1.0); d];
    for k in 1..d {
        pow_xi[k] = pow_xi[k - 1] * xi;
        pow_mxc[k] = pow_mxc[k - 1] * (-xi.conj());
    }
    let sqf: Vec<f64> = (0..d).map(|k| factorial(k).sqrt()).collect();
    let mut acc = c(0.0);
    for n in 0..d {
        for m in 0..d {
            let r = rho[(m, n)];
            if r == c(0.0) {
                continue;
            }
            // <n| e^{xi a^dag} e^{-xi^* a} |m>
            let mut el = c(0.0);
            for k in 0..=n.min(m) {
                el += pow_xi[n - k]
                    * pow_mxc[m - k]
                    * (sqf[n] * sqf[m] / (factorial(n - k) * factorial(m - k) * sqf[k] * sqf[k]));
            }
            acc += r * el;
        }
    }
    acc * (-0.5 * xi.norm_sqr()).exp()
}

/// `W(alpha) = (1/pi^2) integral d^2 xi Tr[rho D(xi)] e^{alpha xi^* - alpha^* xi}`
/// by the trapezoid rule on `[-extent, extent]^2` with `n` nodes per axis.
pub fn characteristic_wigner(rho: &CM, alphas: &[Complex64], extent: f64, n: usize) -> Vec<f64> {
    let h = 2.0 * extent / (n - 1) as f64;
    let mut chi = Vec::with_capacity(n * n);
    for i in 0..n {
        for k in 0..n {
            let xi = Complex64::new(-extent + h * i as f64, -extent + h * k as f64);
            let wt = if i == 0 || i == n - 1 { 0.5 } else { 1.0 } * if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            chi.push((xi, characteristic(rho, xi) * wt));
        }
    }
    alphas
        .iter()
        .map(|&a| {
            let s: Complex64 = chi.iter().map(|&(xi, x)| x * (a * xi.conj() - a.conj() * xi).exp()).sum();
            (s * h * h).re / (std::f64::consts::PI * std::f64::consts::PI)
        })
        .collect()
}
