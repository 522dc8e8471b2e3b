//! Special functions: log-factorials, Hermite and associated Laguerre
//! polynomials, Wigner small-d / D matrices and Wigner 3j symbols.
//!
//! Angular-momentum quantum numbers are carried as [`HalfInt`], which stores
//! twice the value so that `-j..=j` loops use exact integer arithmetic.
//! Factorial ratios are evaluated as `exp(sum of ln k!)` with the sign kept
//! separately; this keeps `(2j)!`-sized terms finite up to the configured
//! `J_max`.

use std::fmt;

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::scalar::{cis, CMatrix, Real, C};

/// A half-integer, stored as twice its value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);

    pub const fn from_doubled(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn int(n: i32) -> Self {
        HalfInt(2 * n)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub fn to_real<T: Real>(self) -> T {
        T::lit(self.as_f64())
    }

    /// `-j, -j+1, ..., j` for a spin `j` (self).
    pub fn projections(self) -> impl DoubleEndedIterator<Item = HalfInt> + Clone {
        let tj = self.0;
        (0..self.dim() as i32).map(move |i| HalfInt(2 * i - tj))
    }

    /// Dimension `2j + 1` of the spin-`j` representation.
    pub fn dim(self) -> usize {
        (self.0 + 1).max(0) as usize
    }

    /// Row/column index of projection `m` inside a spin-`self` matrix.
    pub fn index_of(self, m: HalfInt) -> usize {
        ((m.0 + self.0) / 2) as usize
    }

    /// Projection stored at `index` inside a spin-`self` matrix.
    pub fn projection_at(self, index: usize) -> HalfInt {
        HalfInt(2 * index as i32 - self.0)
    }
}

impl std::ops::Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl std::ops::Add for HalfInt {
    type Output = HalfInt;
    fn add(self, o: HalfInt) -> HalfInt {
        HalfInt(self.0 + o.0)
    }
}

impl std::ops::Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, o: HalfInt) -> HalfInt {
        HalfInt(self.0 - o.0)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", self.0 / 2)
        } else {
            write!(f, "{}/2", self.0)
        }
    }
}

/// Default upper bound on the spin handled by the D-matrix routines
/// (`j = 25`, i.e. fifty atoms).
pub const DEFAULT_J_MAX: HalfInt = HalfInt::int(25);

/// `(-1)^k` for an integer exponent given as a doubled half-integer.
#[inline]
fn parity_sign_doubled(twice_k: i32) -> f64 {
    debug_assert!(twice_k % 2 == 0, "non-integer parity exponent {twice_k}/2");
    if (twice_k / 2).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Table of `ln(k!)` for `k = 0..=k_max`.
#[derive(Clone, Debug)]
pub struct LogFactorialTable {
    values: Vec<f64>,
}

impl LogFactorialTable {
    pub fn new(k_max: usize) -> Self {
        let mut values = Vec::with_capacity(k_max + 1);
        values.push(0.0);
        let mut acc = 0.0f64;
        for k in 1..=k_max {
            acc += (k as f64).ln();
            values.push(acc);
        }
        LogFactorialTable { values }
    }

    pub fn k_max(&self) -> usize {
        self.values.len() - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `ln(k!)`; entries beyond the table are accumulated on the fly.
    pub fn ln_factorial(&self, k: usize) -> f64 {
        match self.values.get(k) {
            Some(&v) => v,
            None => {
                let top = self.k_max();
                self.values[top] + ((top + 1)..=k).map(|i| (i as f64).ln()).sum::<f64>()
            }
        }
    }
}

static LOG_FACTORIALS: Lazy<LogFactorialTable> = Lazy::new(|| LogFactorialTable::new(1024));

/// `ln(k!)` from the shared table.
#[inline]
pub fn ln_factorial(k: usize) -> f64 {
    LOG_FACTORIALS.ln_factorial(k)
}

/// `ln C(n, k)`.
#[inline]
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Physicists' Hermite polynomial `H_n(x)` by the three-term recurrence.
pub fn hermite<T: Real>(n: usize, x: T) -> Result<T> {
    if !x.is_finite() {
        return Err(TomoError::Domain(format!("hermite: non-finite argument {x}")));
    }
    let two = T::lit(2.0);
    let mut prev = T::one();
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = two * x;
    for k in 1..n {
        let next = two * x * cur - two * T::from_usize_lossy(k) * prev;
        prev = cur;
        cur = next;
    }
    if !cur.is_finite() {
        return Err(TomoError::Range(format!(
            "hermite: H_{n}({x}) overflows the scalar type; use a normalized recurrence"
        )));
    }
    Ok(cur)
}

/// Associated Laguerre polynomial `L_n^(a)(x)` for integer `a`, including
/// negative `a` down to `-n`.
///
/// For `a < 0` the reflection `L_n^(-k)(x) = (-x)^k (n-k)!/n! L_{n-k}^(k)(x)`
/// is used so that the value is obtained without cancellation near `x = 0`.
pub fn laguerre_assoc<T: Real>(n: usize, a: i64, x: T) -> Result<T> {
    if (n as i64) + a < 0 {
        return Err(TomoError::Domain(format!("laguerre: n + a = {} < 0", n as i64 + a)));
    }
    if a < 0 {
        let k = (-a) as usize;
        let inner = laguerre_recurrence(n - k, k as i64, x);
        let ratio = T::lit((ln_factorial(n - k) - ln_factorial(n)).exp());
        let sign = if k.is_multiple_of(2) { T::one() } else { -T::one() };
        return Ok(sign * x.powi(k as i32) * ratio * inner);
    }
    Ok(laguerre_recurrence(n, a, x))
}

fn laguerre_recurrence<T: Real>(n: usize, a: i64, x: T) -> T {
    let a = T::lit(a as f64);
    let mut prev = T::one();
    if n == 0 {
        return prev;
    }
    let mut cur = T::one() + a - x;
    for k in 1..n {
        let kf = T::from_usize_lossy(k);
        let next = ((T::lit(2.0) * kf + T::one() + a - x) * cur - (kf + a) * prev) / (kf + T::one());
        prev = cur;
        cur = next;
    }
    cur
}

fn check_projection(j: HalfInt, m: HalfInt, what: &str) -> Result<()> {
    if j.twice() < 0 || m.twice().abs() > j.twice() || (j.twice() - m.twice()) % 2 != 0 {
        return Err(TomoError::Domain(format!("{what}: invalid (j, m) = ({j}, {m})")));
    }
    Ok(())
}

/// Wigner small-d element `d^j_{mp,m}(theta) = <j mp| exp(-i theta J_y) |j m>`.
pub fn wigner_d_small<T: Real>(j: HalfInt, mp: HalfInt, m: HalfInt, theta: T) -> Result<T> {
    check_projection(j, mp, "wigner_d_small")?;
    check_projection(j, m, "wigner_d_small")?;
    let (c, s) = ((theta / T::lit(2.0)).cos(), (theta / T::lit(2.0)).sin());
    Ok(small_d_unchecked(j, mp, m, c, s))
}

/// Factorial sum for `d^j_{mp,m}` given `cos(theta/2)` and `sin(theta/2)`.
fn small_d_unchecked<T: Real>(j: HalfInt, mp: HalfInt, m: HalfInt, c: T, s: T) -> T {
    let (tj, tmp, tm) = (j.twice(), mp.twice(), m.twice());
    let jpm = ((tj + tm) / 2) as i64;
    let jmm = ((tj - tm) / 2) as i64;
    let jpmp = ((tj + tmp) / 2) as i64;
    let jmmp = ((tj - tmp) / 2) as i64;
    let mp_minus_m = ((tmp - tm) / 2) as i64;
    let half_ln_norm = 0.5
        * (ln_factorial(jpm as usize)
            + ln_factorial(jmm as usize)
            + ln_factorial(jpmp as usize)
            + ln_factorial(jmmp as usize));
    let k_lo = 0i64.max(-mp_minus_m);
    let k_hi = jpm.min(jmmp);
    let mut acc = T::zero();
    for k in k_lo..=k_hi {
        let ln_den = ln_factorial((jpm - k) as usize)
            + ln_factorial(k as usize)
            + ln_factorial((jmmp - k) as usize)
            + ln_factorial((k + mp_minus_m) as usize);
        let sign = if (k + mp_minus_m).rem_euclid(2) == 0 { T::one() } else { -T::one() };
        let cos_pow = (jpm + jmmp - 2 * k) as i32;
        let sin_pow = (2 * k + mp_minus_m) as i32;
        let mag = T::lit((half_ln_norm - ln_den).exp());
        acc += sign * mag * c.powi(cos_pow) * s.powi(sin_pow);
    }
    acc
}

/// Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)` via the Racah sum.
///
/// Returns zero when `m1 + m2 + m3 != 0` or the triangle rule fails; invalid
/// `(j, m)` pairs are a domain error.
pub fn wigner_3j<T: Real>(j1: HalfInt, j2: HalfInt, j3: HalfInt, m1: HalfInt, m2: HalfInt, m3: HalfInt) -> Result<T> {
    check_projection(j1, m1, "wigner_3j")?;
    check_projection(j2, m2, "wigner_3j")?;
    check_projection(j3, m3, "wigner_3j")?;
    Ok(T::lit(wigner_3j_f64(j1, j2, j3, m1, m2, m3)))
}

pub(crate) fn wigner_3j_f64(j1: HalfInt, j2: HalfInt, j3: HalfInt, m1: HalfInt, m2: HalfInt, m3: HalfInt) -> f64 {
    let (a, b, c) = (j1.twice(), j2.twice(), j3.twice());
    if (m1 + m2 + m3).twice() != 0 {
        return 0.0;
    }
    if (a + b + c) % 2 != 0 || c < (a - b).abs() || c > a + b {
        return 0.0;
    }
    let half = |x: i32| -> i64 { i64::from(x / 2) };
    let (ma, mb, mc) = (m1.twice(), m2.twice(), m3.twice());
    let t1 = half(a + b - c);
    let t2 = half(a - b + c);
    let t3 = half(-a + b + c);
    let tsum = half(a + b + c);
    let ln_delta = ln_factorial(t1 as usize) + ln_factorial(t2 as usize) + ln_factorial(t3 as usize)
        - ln_factorial(tsum as usize + 1);
    let ln_m = ln_factorial(half(a + ma) as usize)
        + ln_factorial(half(a - ma) as usize)
        + ln_factorial(half(b + mb) as usize)
        + ln_factorial(half(b - mb) as usize)
        + ln_factorial(half(c + mc) as usize)
        + ln_factorial(half(c - mc) as usize);
    let half_ln_pref = 0.5 * (ln_delta + ln_m);

    // Denominator arguments: k, c-b+k+m1, c-a+k-m2, a+b-c-k, a-k-m1, b-k+m2.
    let d2 = half(c - b + ma);
    let d3 = half(c - a - mb);
    let d4 = t1;
    let d5 = half(a - ma);
    let d6 = half(b + mb);
    let k_lo = 0i64.max(-d2).max(-d3);
    let k_hi = d4.min(d5).min(d6);
    let mut acc = 0.0f64;
    for k in k_lo..=k_hi {
        let ln_den = ln_factorial(k as usize)
            + ln_factorial((d2 + k) as usize)
            + ln_factorial((d3 + k) as usize)
            + ln_factorial((d4 - k) as usize)
            + ln_factorial((d5 - k) as usize)
            + ln_factorial((d6 - k) as usize);
        let term = (half_ln_pref - ln_den).exp();
        acc += if k % 2 == 0 { term } else { -term };
    }
    parity_sign_doubled(a - b - mc) * acc
}

/// Euler angles `(psi, theta, phi)` of the rotation
/// `exp(-i psi J_z) exp(-i theta J_y) exp(-i phi J_z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles<T> {
    pub psi: T,
    pub theta: T,
    pub phi: T,
}

impl<T: Real> EulerAngles<T> {
    pub fn new(psi: T, theta: T, phi: T) -> Self {
        EulerAngles { psi, theta, phi }
    }

    pub fn identity() -> Self {
        EulerAngles::new(T::zero(), T::zero(), T::zero())
    }
}

/// Rotation matrix `D^j_{m',m}(psi, theta, phi) = exp(-i m' psi) d^j_{m'm}(theta) exp(-i m phi)`.
///
/// Rows and columns run over `m = -j..=j`; use [`WignerDMatrix::get`] for
/// projection-indexed access.
#[derive(Clone, Debug)]
pub struct WignerDMatrix<T: Real> {
    pub j: HalfInt,
    pub euler: EulerAngles<T>,
    pub entries: CMatrix<T>,
}

impl<T: Real> WignerDMatrix<T> {
    pub fn get(&self, mp: HalfInt, m: HalfInt) -> C<T> {
        self.entries[(self.j.index_of(mp), self.j.index_of(m))]
    }
}

/// Real small-d matrix for spin `j`, indexed like [`WignerDMatrix`].
pub fn small_d_matrix<T: Real>(j: HalfInt, theta: T) -> nalgebra::DMatrix<T> {
    let dim = j.dim();
    let (c, s) = ((theta / T::lit(2.0)).cos(), (theta / T::lit(2.0)).sin());
    nalgebra::DMatrix::from_fn(dim, dim, |r, col| small_d_unchecked(j, j.projection_at(r), j.projection_at(col), c, s))
}

/// Full Wigner D matrix for spin `j <= DEFAULT_J_MAX`.
pub fn wigner_d_matrix<T: Real>(j: HalfInt, euler: EulerAngles<T>) -> Result<WignerDMatrix<T>> {
    wigner_d_matrix_with_limit(j, euler, DEFAULT_J_MAX)
}

pub fn wigner_d_matrix_with_limit<T: Real>(
    j: HalfInt,
    euler: EulerAngles<T>,
    j_max: HalfInt,
) -> Result<WignerDMatrix<T>> {
    if j.twice() < 0 {
        return Err(TomoError::Domain(format!("negative spin {j}")));
    }
    if j > j_max {
        return Err(TomoError::Resource(format!("spin {j} exceeds J_max = {j_max}")));
    }
    let d = small_d_matrix(j, euler.theta);
    let dim = j.dim();
    let entries = CMatrix::from_fn(dim, dim, |r, c| {
        let mp = j.projection_at(r).to_real::<T>();
        let m = j.projection_at(c).to_real::<T>();
        cis(-(mp * euler.psi + m * euler.phi)) * d[(r, c)]
    });
    Ok(WignerDMatrix { j, euler, entries })
}
