//! Composition sampling from the posterior predictive distribution, MSPE,
//! DIC and gridded predictive surfaces.

use std::collections::HashMap;
use std::sync::Arc;

use faer::Mat;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::approx::{CovTemplate, CovarianceModel};
use crate::covariance::Locations;
use crate::lowrank::StructuredCov;
use crate::mcmc::{quantile_sorted, Chain};
use crate::model::{log_likelihood, Params, RegressionData};
use crate::{rng_stream, Error, Result, PREDICT_STREAM};

/// Tolerance below zero for a computed conditional variance before it is
/// treated as an error rather than clamped.
pub const VARIANCE_TOLERANCE: f64 = 1e-8;

/// Conditional mean and variance of `Y(s0)` given the data, for a
/// cross-covariance vector `c` computed under the same approximation as `cov`.
pub fn predictive_moments(
    x0: &[f64],
    c: &[f64],
    params: &Params,
    data: &RegressionData,
    cov: &StructuredCov,
) -> Result<(f64, f64)> {
    let (mean, var) = batch_moments(
        &Mat::from_fn(1, x0.len(), |_, j| x0[j]),
        &Mat::from_fn(c.len(), 1, |i, _| c[i]),
        params,
        data,
        cov,
    )?;
    Ok((mean[0], var[0]))
}

/// Cross-covariance vector between `s0` and the observed locations under the
/// template's approximation, scaled by `sigma2`.
pub fn cross_covariance(template: &CovTemplate, s0: &[f64], sigma2: f64) -> Result<Vec<f64>> {
    let t = Locations::from_flat(s0.len(), s0.to_vec())?;
    let c = template.cross_correlation(&t)?;
    Ok((0..c.nrows()).map(|i| sigma2 * c[(i, 0)]).collect())
}

/// One draw of `Y(s0)` from its conditional normal.
pub fn predictive_draw<R: Rng + ?Sized>(
    s0: &[f64],
    x0: &[f64],
    params: &Params,
    data: &RegressionData,
    template: &CovTemplate,
    cov: &StructuredCov,
    rng: &mut R,
) -> Result<f64> {
    let c = cross_covariance(template, s0, params.sigma2)?;
    let (mean, var) = predictive_moments(x0, &c, params, data, cov)?;
    let z: f64 = StandardNormal.sample(rng);
    Ok(mean + var.sqrt() * z)
}

// Moments for every column of `c_unit·σ²` (n × k), rows of `x0` (k × p).
fn batch_moments(
    x0: &Mat<f64>,
    c: &Mat<f64>,
    params: &Params,
    data: &RegressionData,
    cov: &StructuredCov,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = c.ncols();
    let p = data.p();
    if x0.ncols() != p || x0.nrows() != k || c.nrows() != data.n() || params.beta.len() != p {
        return Err(Error::usage("prediction inputs have inconsistent dimensions"));
    }
    let alpha = cov.solve_vec(&data.residual(&params.beta))?;
    let s = cov.solve(c.as_ref())?;
    let prior_var = params.sigma2 + params.tau2;
    let mut means = Vec::with_capacity(k);
    let mut vars = Vec::with_capacity(k);
    for j in 0..k {
        let fixed: f64 = (0..p).map(|q| x0[(j, q)] * params.beta[q]).sum();
        let mut m = fixed;
        let mut reduction = 0.0;
        for i in 0..c.nrows() {
            m += c[(i, j)] * alpha[i];
            reduction += c[(i, j)] * s[(i, j)];
        }
        let v = prior_var - reduction;
        if v < -VARIANCE_TOLERANCE * prior_var.max(1.0) {
            return Err(Error::Numerical(format!(
                "negative predictive variance {v:e} at target {j}"
            )));
        }
        means.push(m);
        vars.push(v.max(0.0));
    }
    Ok((means, vars))
}

/// Predictive draws at `targets`: one row per used posterior draw, one
/// column per target. `max_draws` thins the chain evenly.
pub fn sample_predictive(
    chain: &Chain,
    train: &RegressionData,
    model: &CovarianceModel,
    targets: &Locations,
    x_targets: &Mat<f64>,
    max_draws: Option<usize>,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if chain.is_empty() {
        return Err(Error::usage("empty chain"));
    }
    if x_targets.nrows() != targets.len() {
        return Err(Error::usage("one regressor row per prediction target"));
    }
    let used = chain.thinned_indices(max_draws);
    let mut cross: HashMap<Vec<usize>, Arc<Mat<f64>>> = HashMap::new();
    let mut items = Vec::with_capacity(used.len());
    for &l in &used {
        let params = chain.params(l);
        let idx = model.index_of(&params.theta).ok_or_else(|| {
            Error::usage(format!("draw {l}: range parameters {:?} are not atoms", params.theta))
        })?;
        let template = model.template(&idx)?;
        let c = match cross.get(&idx) {
            Some(c) => c.clone(),
            None => {
                let c = Arc::new(template.cross_correlation(targets)?);
                cross.insert(idx.clone(), c.clone());
                c
            }
        };
        items.push((l, params, template, c));
    }
    items
        .into_par_iter()
        .map(|(l, params, template, c_unit)| {
            let cov = template.instantiate(params.sigma2, params.tau2);
            let c = Mat::from_fn(c_unit.nrows(), c_unit.ncols(), |i, j| params.sigma2 * c_unit[(i, j)]);
            let (means, vars) = batch_moments(x_targets, &c, &params, train, &cov)?;
            let mut rng = rng_stream(seed.wrapping_add((l as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)), PREDICT_STREAM);
            Ok(means
                .iter()
                .zip(&vars)
                .map(|(m, v)| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    m + v.sqrt() * z
                })
                .collect())
        })
        .collect()
}

/// Per-target mean of predictive draws.
pub fn draw_means(draws: &[Vec<f64>]) -> Vec<f64> {
    let k = draws.first().map_or(0, Vec::len);
    let mut m = vec![0.0; k];
    for row in draws {
        for (a, b) in m.iter_mut().zip(row) {
            *a += b;
        }
    }
    let len = draws.len().max(1) as f64;
    m.iter_mut().for_each(|v| *v /= len);
    m
}

/// Mean squared error of `predicted` against `observed`.
pub fn mean_squared_error(observed: &[f64], predicted: &[f64]) -> f64 {
    let m = observed.len().max(1) as f64;
    observed
        .iter()
        .zip(predicted)
        .map(|(y, p)| (y - p) * (y - p))
        .sum::<f64>()
        / m
}

/// Mean squared prediction error at the test points using the mean of the
/// predictive draws as point predictor.
pub fn mspe(
    test: &RegressionData,
    chain: &Chain,
    train: &RegressionData,
    model: &CovarianceModel,
    max_draws: Option<usize>,
    seed: u64,
) -> Result<f64> {
    let draws = sample_predictive(chain, train, model, test.locations(), test.x(), max_draws, seed)?;
    Ok(mean_squared_error(test.y(), &draw_means(&draws)))
}

/// `(DIC, p_D)` with `D(Ω) = −2 log f(Y | Ω)`; the posterior mean of each
/// range parameter is snapped to its nearest atom.
pub fn dic(chain: &Chain, data: &RegressionData, model: &CovarianceModel) -> Result<(f64, f64)> {
    if chain.is_empty() {
        return Err(Error::usage("empty chain"));
    }
    let lls: Vec<f64> = if chain.log_likelihood.len() == chain.len() {
        chain.log_likelihood.clone()
    } else {
        (0..chain.len())
            .map(|l| {
                let p = chain.params(l);
                let idx = model
                    .index_of(&p.theta)
                    .ok_or_else(|| Error::usage("chain range parameters are not atoms"))?;
                let cov = model.template(&idx)?.instantiate(p.sigma2, p.tau2);
                log_likelihood(data, &p, &cov)
            })
            .collect::<Result<_>>()?
    };
    let mean_dev = -2.0 * lls.iter().sum::<f64>() / lls.len() as f64;
    let mut pm = chain.posterior_mean();
    let idx = model.nearest_index(&pm.theta);
    pm.theta = model.theta_at(&idx);
    let cov = model.template(&idx)?.instantiate(pm.sigma2, pm.tau2);
    let dev_at_mean = -2.0 * log_likelihood(data, &pm, &cov)?;
    let p_d = mean_dev - dev_at_mean;
    Ok((mean_dev + p_d, p_d))
}

/// Per-point summaries of predictive draws.
#[derive(Debug, Clone)]
pub struct PredictiveSummary {
    pub points: Locations,
    pub mean: Vec<f64>,
    pub q05: Vec<f64>,
    pub q95: Vec<f64>,
    pub draws: usize,
}

pub fn summarize_draws(points: Locations, draws: &[Vec<f64>]) -> PredictiveSummary {
    let k = points.len();
    let mean = draw_means(draws);
    let mut q05 = Vec::with_capacity(k);
    let mut q95 = Vec::with_capacity(k);
    for j in 0..k {
        let mut col: Vec<f64> = draws.iter().map(|r| r[j]).collect();
        col.sort_by(f64::total_cmp);
        q05.push(quantile_sorted(&col, 0.05));
        q95.push(quantile_sorted(&col, 0.95));
    }
    PredictiveSummary {
        points,
        mean,
        q05,
        q95,
        draws: draws.len(),
    }
}

/// Regular `g × g` grid over `bounds`, first axis varying fastest.
pub fn grid_points(bounds: [(f64, f64); 2], g: usize) -> Result<Locations> {
    if g < 2 {
        return Err(Error::usage("grid resolution must be >= 2"));
    }
    let step = |(lo, hi): (f64, f64), i: usize| {
        if i == g - 1 {
            hi
        } else {
            lo + (hi - lo) * i as f64 / (g - 1) as f64
        }
    };
    let mut coords = Vec::with_capacity(2 * g * g);
    for iy in 0..g {
        for ix in 0..g {
            coords.push(step(bounds[0], ix));
            coords.push(step(bounds[1], iy));
        }
    }
    Locations::from_flat(2, coords)
}

/// Default cap on posterior draws used for a surface.
pub const SURFACE_MAX_DRAWS: usize = 2000;

/// Predictive mean and 5%/95% quantiles on a `g × g` grid. `grid_x` holds
/// the regressors at each grid point (None: intercept only).
#[allow(clippy::too_many_arguments)]
pub fn surface_grid(
    bounds: [(f64, f64); 2],
    g: usize,
    chain: &Chain,
    data: &RegressionData,
    model: &CovarianceModel,
    grid_x: Option<&Mat<f64>>,
    max_draws: Option<usize>,
    seed: u64,
) -> Result<PredictiveSummary> {
    let points = grid_points(bounds, g)?;
    let owned;
    let x = match grid_x {
        Some(x) => x,
        None => {
            if data.p() != 1 {
                return Err(Error::usage(
                    "grid regressors are required when the model has covariates beyond the intercept",
                ));
            }
            owned = Mat::from_fn(points.len(), 1, |_, _| 1.0);
            &owned
        }
    };
    let draws = sample_predictive(
        chain,
        data,
        model,
        &points,
        x,
        Some(max_draws.unwrap_or(SURFACE_MAX_DRAWS)),
        seed,
    )?;
    Ok(summarize_draws(points, &draws))
}
