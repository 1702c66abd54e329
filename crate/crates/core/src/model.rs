//! Spatial linear regression: data, parameters, priors and likelihood.

use faer::Mat;

use crate::covariance::Locations;
use crate::dense;
use crate::lowrank::StructuredCov;
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Regressors, responses and locations for one set of observations.
#[derive(Debug, Clone)]
pub struct RegressionData {
    x: Mat<f64>,
    y: Vec<f64>,
    locations: Locations,
}

impl RegressionData {
    /// Checks row counts and full column rank of `x`.
    pub fn new(x: Mat<f64>, y: Vec<f64>, locations: Locations) -> Result<Self> {
        let data = Self::new_unchecked(x, y, locations)?;
        data.check_rank()?;
        Ok(data)
    }

    /// Dimension checks only; regressors may be rank deficient (e.g. X = 0).
    pub fn new_unchecked(x: Mat<f64>, y: Vec<f64>, locations: Locations) -> Result<Self> {
        if x.nrows() != y.len() || locations.len() != y.len() {
            return Err(Error::usage(format!(
                "row counts disagree: X has {}, Y has {}, locations {}",
                x.nrows(),
                y.len(),
                locations.len()
            )));
        }
        if x.ncols() == 0 {
            return Err(Error::usage("X needs at least one column"));
        }
        Ok(RegressionData { x, y, locations })
    }

    fn check_rank(&self) -> Result<()> {
        let sv = self
            .x
            .singular_values()
            .map_err(|e| Error::Numerical(format!("SVD of X failed: {e:?}")))?;
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        let tol = (self.n().max(self.p()) as f64) * f64::EPSILON * max;
        if self.n() < self.p() || !(min > tol) {
            return Err(Error::usage(format!(
                "X ({}x{}) does not have full column rank",
                self.n(),
                self.p()
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Mat<f64> {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn locations(&self) -> &Locations {
        &self.locations
    }

    pub fn x_row(&self, i: usize) -> Vec<f64> {
        (0..self.p()).map(|j| self.x[(i, j)]).collect()
    }

    /// `Y − Xβ`.
    pub fn residual(&self, beta: &[f64]) -> Vec<f64> {
        assert_eq!(beta.len(), self.p());
        (0..self.n())
            .map(|i| {
                let fit: f64 = (0..self.p()).map(|j| self.x[(i, j)] * beta[j]).sum();
                self.y[i] - fit
            })
            .collect()
    }

    /// Rows `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let x = Mat::from_fn(idx.len(), self.p(), |i, j| self.x[(idx[i], j)]);
        RegressionData {
            x,
            y: idx.iter().map(|&i| self.y[i]).collect(),
            locations: self.locations.subset(idx),
        }
    }

    /// Least-squares coefficients and residual variance `RSS / (n − p)`.
    pub fn ols(&self) -> Result<(Vec<f64>, f64)> {
        let xtx = dense::at_b(self.x.as_ref(), self.x.as_ref());
        let l = dense::cholesky(xtx.as_ref(), "X'X")?;
        let mut b = dense::at_b(self.x.as_ref(), dense::column_vector(&self.y).as_ref());
        dense::solve_factor_in_place(l.as_ref(), b.as_mut());
        let beta: Vec<f64> = (0..self.p()).map(|i| b[(i, 0)]).collect();
        let r = self.residual(&beta);
        let dof = (self.n().saturating_sub(self.p())).max(1) as f64;
        let s2 = r.iter().map(|v| v * v).sum::<f64>() / dof;
        Ok((beta, s2))
    }
}

/// Ω = (β, τ², σ², θ); θ holds the range parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub beta: Vec<f64>,
    pub tau2: f64,
    pub sigma2: f64,
    pub theta: Vec<f64>,
}

impl Params {
    pub fn in_support(&self) -> bool {
        self.tau2 > 0.0 && self.sigma2 > 0.0 && self.theta.iter().all(|&t| t > 0.0)
    }
}

/// Unnormalized inverse-gamma density `x^{−(a+1)} e^{−b/x}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseGamma {
    pub shape: f64,
    pub scale: f64,
}

impl InverseGamma {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && scale > 0.0) {
            return Err(Error::config(format!(
                "inverse-gamma parameters must be > 0 (a = {shape}, b = {scale})"
            )));
        }
        Ok(InverseGamma { shape, scale })
    }

    pub fn log_density(&self, x: f64) -> f64 {
        if x > 0.0 {
            -(self.shape + 1.0) * x.ln() - self.scale / x
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Normal prior on β, stored by its precision so a flat prior is exact.
#[derive(Debug, Clone)]
pub struct NormalPrior {
    pub mean: Vec<f64>,
    pub precision: Mat<f64>,
}

impl NormalPrior {
    pub fn new(mean: Vec<f64>, cov: &Mat<f64>) -> Result<Self> {
        let p = mean.len();
        if cov.nrows() != p || cov.ncols() != p {
            return Err(Error::config("beta prior covariance must be p x p"));
        }
        let l = dense::cholesky(cov.as_ref(), "beta prior covariance")
            .map_err(|e| Error::config(e.to_string()))?;
        let mut inv = Mat::<f64>::identity(p, p);
        dense::solve_factor_in_place(l.as_ref(), inv.as_mut());
        Ok(NormalPrior {
            mean,
            precision: inv,
        })
    }

    /// Zero precision: no prior information on β.
    pub fn flat(p: usize) -> Self {
        NormalPrior {
            mean: vec![0.0; p],
            precision: Mat::zeros(p, p),
        }
    }

    pub fn log_density(&self, beta: &[f64]) -> f64 {
        let p = self.mean.len();
        let d: Vec<f64> = (0..p).map(|i| beta[i] - self.mean[i]).collect();
        let mut q = 0.0;
        for i in 0..p {
            for j in 0..p {
                q += d[i] * self.precision[(i, j)] * d[j];
            }
        }
        -0.5 * q
    }
}

#[derive(Debug, Clone)]
pub struct PriorSpec {
    pub beta: NormalPrior,
    pub tau2: InverseGamma,
    pub sigma2: InverseGamma,
    /// Discrete-uniform atoms for each range parameter.
    pub theta_atoms: Vec<Vec<f64>>,
}

impl PriorSpec {
    pub fn validate(&self) -> Result<()> {
        for (k, atoms) in self.theta_atoms.iter().enumerate() {
            if atoms.is_empty() {
                return Err(Error::config(format!("range parameter {k} has no atoms")));
            }
            if atoms.iter().any(|&a| !(a > 0.0) || !a.is_finite()) {
                return Err(Error::config(format!("range parameter {k}: atoms must be > 0")));
            }
            let mut sorted = atoms.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::config(format!("range parameter {k}: atoms must be distinct")));
            }
        }
        Ok(())
    }
}

/// `log f(Y | Ω)` under `cov`, which must already carry `τ²`.
pub fn log_likelihood(data: &RegressionData, params: &Params, cov: &StructuredCov) -> Result<f64> {
    if cov.n() != data.n() || params.beta.len() != data.p() {
        return Err(Error::usage(format!(
            "dimension mismatch: data n = {}, p = {}; covariance n = {}; beta length {}",
            data.n(),
            data.p(),
            cov.n(),
            params.beta.len()
        )));
    }
    let r = data.residual(&params.beta);
    gaussian_log_density(&r, cov)
}

/// `log N(r; 0, cov)`.
pub fn gaussian_log_density(r: &[f64], cov: &StructuredCov) -> Result<f64> {
    let n = r.len() as f64;
    Ok(-0.5 * n * LN_2PI - 0.5 * cov.log_det()? - 0.5 * cov.quad_form(r)?)
}

/// Unnormalized log prior; `−∞` outside the support.
pub fn log_prior(params: &Params, prior: &PriorSpec) -> f64 {
    if !params.in_support() {
        return f64::NEG_INFINITY;
    }
    if params.theta.len() != prior.theta_atoms.len() {
        return f64::NEG_INFINITY;
    }
    for (t, atoms) in params.theta.iter().zip(&prior.theta_atoms) {
        if !atoms.contains(t) {
            return f64::NEG_INFINITY;
        }
    }
    prior.beta.log_density(&params.beta)
        + prior.tau2.log_density(params.tau2)
        + prior.sigma2.log_density(params.sigma2)
}
