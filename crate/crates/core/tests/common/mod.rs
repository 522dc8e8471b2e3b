#![allow(dead_code)]

use bectomo::scalar::{CMatrix, CVector};
use bectomo::states::{Basis, DensityMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha20Rng, rows: usize, cols: usize) -> CMatrix<f64> {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Full-rank random density matrix `G G^dag / Tr`.
pub fn random_density(basis: Basis, seed: u64) -> DensityMatrix<f64> {
    let d = basis.dim();
    let g = gaussian_matrix(&mut rng(seed), d, d);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    DensityMatrix::from_raw(basis, rho / tr)
}

pub fn random_unit_vector(d: usize, seed: u64) -> CVector<f64> {
    let g = gaussian_matrix(&mut rng(seed), d, 1);
    let n = g.norm();
    CVector::from_iterator(d, g.iter().map(|z| z / n))
}

pub fn max_abs(a: &CMatrix<f64>, b: &CMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
