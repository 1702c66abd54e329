//! Dense reference computations in nalgebra, independent of the faer code
//! paths under test.
#![allow(dead_code)]

use faer::Mat;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spatial_mlp::Locations;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn to_na(m: &Mat<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn from_na(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn vec_na(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

pub fn chol(a: &DMatrix<f64>) -> nalgebra::Cholesky<f64, nalgebra::Dyn> {
    a.clone().cholesky().expect("oracle matrix must be SPD")
}

pub fn log_det(a: &DMatrix<f64>) -> f64 {
    let l = chol(a).l();
    2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>()
}

pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    chol(a).solve(b)
}

pub fn quad(a: &DMatrix<f64>, v: &[f64]) -> f64 {
    let x = chol(a).solve(&vec_na(v));
    vec_na(v).dot(&x)
}

pub fn min_eig(a: &DMatrix<f64>) -> f64 {
    let s = (a + a.transpose()) * 0.5;
    s.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// `max |a − b| / max |b|`.
pub fn rel_mat(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs())) / scale
}

pub fn uniform_locations(n: usize, side: f64, seed: u64) -> Locations {
    let mut r = rng(seed);
    let pts: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![r.random_range(0.0..side), r.random_range(0.0..side)])
        .collect();
    Locations::new(&pts).unwrap()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// σ² exp(−√2 h / λ), evaluated pairwise.
pub fn exp_gram(locs: &Locations, sigma2: f64, lambda: f64) -> DMatrix<f64> {
    let n = locs.len();
    DMatrix::from_fn(n, n, |i, j| {
        sigma2 * (-(2.0f64).sqrt() * dist(locs.point(i), locs.point(j)) / lambda).exp()
    })
}

pub fn wendland2(x: f64, g: f64) -> f64 {
    if x >= g {
        0.0
    } else {
        let t = x / g;
        (1.0 - t).powi(6) * (1.0 + 6.0 * t + 35.0 * t * t / 3.0)
    }
}

pub fn wendland_dense(locs: &Locations, g: f64) -> DMatrix<f64> {
    let n = locs.len();
    DMatrix::from_fn(n, n, |i, j| wendland2(dist(locs.point(i), locs.point(j)), g))
}

/// `Σ Φ'(Φ Σ Φ')⁻¹ Φ Σ`.
pub fn projection_approx(sigma: &DMatrix<f64>, phi: &DMatrix<f64>) -> DMatrix<f64> {
    let u = sigma * phi.transpose();
    let m = phi * &u;
    let minv_ut = m.cholesky().expect("M must be PD").solve(&u.transpose());
    &u * minv_ut
}

pub fn add_diag(a: &DMatrix<f64>, v: f64) -> DMatrix<f64> {
    a + DMatrix::identity(a.nrows(), a.ncols()) * v
}
