//! Dense Cholesky helpers over faer.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::cholesky::llt;
use faer::linalg::matmul::matmul;
use faer::linalg::solvers::LltError;
use faer::linalg::triangular_solve;
use faer::prelude::*;
use faer::{Accum, Mat, MatMut, MatRef, Side};

use crate::FactorError;

/// Lower Cholesky factor of a symmetric positive definite matrix. Only the
/// lower triangle of `a` is read.
pub fn cholesky(a: MatRef<'_, f64>, what: &'static str) -> Result<Mat<f64>, FactorError> {
    match a.llt(Side::Lower) {
        Ok(llt) => Ok(llt.L().to_owned()),
        Err(LltError::NonPositivePivot { index }) => Err(FactorError::Dense { what, index }),
    }
}

/// Same as [`cholesky`] but factors `a` in place, saving two n² copies.
pub fn cholesky_owned(mut a: Mat<f64>, what: &'static str) -> Result<Mat<f64>, FactorError> {
    let n = a.nrows();
    let par = faer::get_global_parallelism();
    let mut mem = MemBuffer::new(llt::factor::cholesky_in_place_scratch::<f64>(n, par, Default::default()));
    let stack = MemStack::new(&mut mem);
    match llt::factor::cholesky_in_place(a.as_mut(), Default::default(), par, stack, Default::default()) {
        Ok(_) => {}
        Err(LltError::NonPositivePivot { index }) => return Err(FactorError::Dense { what, index }),
    }
    for j in 1..n {
        for i in 0..j {
            a[(i, j)] = 0.0;
        }
    }
    Ok(a)
}

pub fn log_det_from_factor(l: MatRef<'_, f64>) -> f64 {
    2.0 * (0..l.nrows()).map(|j| l[(j, j)].ln()).sum::<f64>()
}

/// Overwrites `b` with `(L L')⁻¹ b`.
pub fn solve_factor_in_place(l: MatRef<'_, f64>, mut b: MatMut<'_, f64>) {
    triangular_solve::solve_lower_triangular_in_place(l, b.rb_mut(), Par::Seq);
    triangular_solve::solve_upper_triangular_in_place(l.transpose(), b.rb_mut(), Par::Seq);
}

/// Overwrites `b` with `L⁻¹ b`.
pub fn solve_lower_in_place(l: MatRef<'_, f64>, b: MatMut<'_, f64>) {
    triangular_solve::solve_lower_triangular_in_place(l, b, Par::Seq);
}

/// Overwrites `b` with `L'⁻¹ b`.
pub fn solve_lower_transpose_in_place(l: MatRef<'_, f64>, b: MatMut<'_, f64>) {
    triangular_solve::solve_upper_triangular_in_place(l.transpose(), b, Par::Seq);
}

/// `a' b`.
pub fn at_b(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::zeros(a.ncols(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a.transpose(), b, 1.0, Par::Seq);
    out
}

/// `a b`.
pub fn mul(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::zeros(a.nrows(), b.ncols());
    matmul(out.as_mut(), Accum::Replace, a, b, 1.0, Par::Seq);
    out
}

/// `a b'`.
pub fn a_bt(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Mat<f64> {
    let mut out = Mat::zeros(a.nrows(), b.nrows());
    matmul(out.as_mut(), Accum::Replace, a, b.transpose(), 1.0, Par::Seq);
    out
}

pub fn frobenius_diff(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let d = a[(i, j)] - b[(i, j)];
            s += d * d;
        }
    }
    s.sqrt()
}

pub fn column_vector(v: &[f64]) -> Mat<f64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}
