//! Inverse and log-determinant of a [`StructuredCov`] through the low-rank
//! update identities, with a sparse Cholesky for `A = S + τ² I`.

use std::sync::Arc;

use faer::{Mat, MatRef};

use crate::dense;
use crate::lowrank::{Core, StructuredCov};
use crate::sparse::CholeskyFactor;
use crate::{FactorError, Result};

#[derive(Debug)]
enum CoreFactor {
    Dense(Mat<f64>),
    Sparse(CholeskyFactor),
}

impl CoreFactor {
    fn solve_in_place(&self, b: faer::MatMut<'_, f64>) {
        match self {
            CoreFactor::Dense(l) => dense::solve_factor_in_place(l.as_ref(), b),
            CoreFactor::Sparse(f) => f.solve_mat_in_place(b),
        }
    }

    /// `L⁻¹ P b`.
    fn forward_in_place(&self, b: faer::MatMut<'_, f64>) {
        match self {
            CoreFactor::Dense(l) => dense::solve_lower_in_place(l.as_ref(), b),
            CoreFactor::Sparse(f) => f.forward_mat_in_place(b),
        }
    }

    /// `P' L'⁻¹ b`.
    fn backward_in_place(&self, b: faer::MatMut<'_, f64>) {
        match self {
            CoreFactor::Dense(l) => dense::solve_lower_transpose_in_place(l.as_ref(), b),
            CoreFactor::Sparse(f) => f.backward_mat_in_place(b),
        }
    }

    fn log_det(&self) -> f64 {
        match self {
            CoreFactor::Dense(l) => dense::log_det_from_factor(l.as_ref()),
            CoreFactor::Sparse(f) => f.log_det(),
        }
    }
}

/// Cached factorizations: `P A P' = L L'`, `W = L⁻¹ P U` and the inner
/// matrix `M + W'W` (equal to `M + U'A⁻¹U`).
#[derive(Debug)]
pub struct Factors {
    core: CoreFactor,
    low_rank: Option<LowRankFactors>,
    log_det: f64,
}

#[derive(Debug)]
struct LowRankFactors {
    w: Mat<f64>,
    inner_chol: Mat<f64>,
}

impl Factors {
    fn compute(cov: &StructuredCov) -> std::result::Result<Self, FactorError> {
        let s = cov.scale;
        let tau2 = cov.nugget;
        let core = match &cov.parts.core {
            Core::Dense(c) => {
                let n = c.nrows();
                let a = Mat::from_fn(n, n, |i, j| {
                    let v = s * c[(i, j)];
                    if i == j {
                        v + tau2
                    } else {
                        v
                    }
                });
                CoreFactor::Dense(dense::cholesky_owned(a, "dense covariance")?)
            }
            Core::Sparse(sp) => CoreFactor::Sparse(sp.factor_shifted(s, tau2)?),
        };
        let mut log_det = core.log_det();
        let low_rank = match &cov.parts.low_rank {
            None => None,
            Some(lr) => {
                let m = lr.rank();
                let mut w = Mat::from_fn(lr.u.nrows(), m, |i, j| s * lr.u[(i, j)]);
                core.forward_in_place(w.as_mut());
                let wtw = dense::at_b(w.as_ref(), w.as_ref());
                let inner = Mat::from_fn(m, m, |i, j| {
                    s * lr.m[(i, j)] + 0.5 * (wtw[(i, j)] + wtw[(j, i)])
                });
                let inner_chol = dense::cholesky(inner.as_ref(), "inner matrix M + U'A⁻¹U")?;
                log_det += dense::log_det_from_factor(inner_chol.as_ref())
                    - (m as f64 * s.ln() + dense::log_det_from_factor(lr.m_chol.as_ref()));
                Some(LowRankFactors { w, inner_chol })
            }
        };
        Ok(Factors {
            core,
            low_rank,
            log_det,
        })
    }
}

impl StructuredCov {
    /// Factorizations, computed on first call.
    pub fn factors(&self) -> Result<Arc<Factors>> {
        self.factors
            .get_or_init(|| Factors::compute(self).map(Arc::new))
            .clone()
            .map_err(Into::into)
    }

    pub fn solve(&self, rhs: MatRef<'_, f64>) -> Result<Mat<f64>> {
        solve(self, rhs)
    }

    pub fn solve_vec(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let x = solve(self, dense::column_vector(rhs).as_ref())?;
        Ok((0..x.nrows()).map(|i| x[(i, 0)]).collect())
    }

    pub fn log_det(&self) -> Result<f64> {
        log_det(self)
    }

    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        quad_form(self, v)
    }
}

/// `cov⁻¹ rhs`.
pub fn solve(cov: &StructuredCov, rhs: MatRef<'_, f64>) -> Result<Mat<f64>> {
    if rhs.nrows() != cov.n() {
        return Err(crate::Error::usage(format!(
            "right-hand side has {} rows, covariance is {}x{}",
            rhs.nrows(),
            cov.n(),
            cov.n()
        )));
    }
    let f = cov.factors()?;
    let mut x = rhs.to_owned();
    match &f.low_rank {
        None => f.core.solve_in_place(x.as_mut()),
        Some(lr) => {
            f.core.forward_in_place(x.as_mut());
            let mut t = dense::at_b(lr.w.as_ref(), x.as_ref());
            dense::solve_factor_in_place(lr.inner_chol.as_ref(), t.as_mut());
            x -= dense::mul(lr.w.as_ref(), t.as_ref());
            f.core.backward_in_place(x.as_mut());
        }
    }
    Ok(x)
}

/// `log |cov|`.
pub fn log_det(cov: &StructuredCov) -> Result<f64> {
    Ok(cov.factors()?.log_det)
}

/// `v' cov⁻¹ v`.
pub fn quad_form(cov: &StructuredCov, v: &[f64]) -> Result<f64> {
    let x = cov.solve_vec(v)?;
    Ok(v.iter().zip(&x).map(|(a, b)| a * b).sum())
}
