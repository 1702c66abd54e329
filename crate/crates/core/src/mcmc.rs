//! Metropolis-within-Gibbs sampler: β (Gibbs), τ² and σ² (random-walk MH),
//! then each range parameter from its discrete conditional.

use std::sync::Arc;
use std::time::Instant;

use faer::Mat;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::approx::{CovTemplate, CovarianceModel};
use crate::dense;
use crate::lowrank::StructuredCov;
use crate::model::{gaussian_log_density, InverseGamma, Params, PriorSpec, RegressionData};
use crate::{rng_stream, Error, Result, SAMPLER_STREAM};

/// Which stages run; a disabled stage keeps its coordinate at the initial value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub beta: bool,
    pub tau2: bool,
    pub sigma2: bool,
    pub theta: bool,
}

impl Default for Stages {
    fn default() -> Self {
        Stages {
            beta: true,
            tau2: true,
            sigma2: true,
            theta: true,
        }
    }
}

/// Overrides for the default starting point.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InitialValues {
    pub beta: Option<Vec<f64>>,
    pub tau2: Option<f64>,
    pub sigma2: Option<f64>,
    pub theta: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    /// Total sweeps, burn-in included.
    pub iterations: usize,
    pub burnin: usize,
    /// Random-walk proposal standard deviations for (τ², σ²).
    pub proposal_sd: [f64; 2],
    pub target_acceptance: f64,
    pub adapt: bool,
    pub adapt_interval: usize,
    pub stages: Stages,
    pub init: InitialValues,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            iterations: 5000,
            burnin: 500,
            proposal_sd: [0.1, 0.1],
            target_acceptance: 0.40,
            adapt: true,
            adapt_interval: 50,
            stages: Stages::default(),
            init: InitialValues::default(),
            seed: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burnin {
            return Err(Error::config(format!(
                "iterations ({}) must exceed burnin ({})",
                self.iterations, self.burnin
            )));
        }
        if self.proposal_sd.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
            return Err(Error::config("proposal standard deviations must be finite and >= 0"));
        }
        if self.adapt && self.adapt_interval == 0 {
            return Err(Error::config("adapt_interval must be >= 1"));
        }
        Ok(())
    }
}

/// Wall-clock seconds per phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Timings {
    pub projector_setup: f64,
    pub factorization: f64,
    pub sweeps: f64,
}

/// Post-burn-in draws of Ω plus sampler metadata.
#[derive(Debug, Clone)]
pub struct Chain {
    pub names: Vec<String>,
    /// One row per kept sweep, columns as in `names`.
    pub draws: Vec<Vec<f64>>,
    /// `log f(Y | Ω)` of each kept draw.
    pub log_likelihood: Vec<f64>,
    pub p: usize,
    /// Post-burn-in acceptance rates of the τ² and σ² stages (None if disabled).
    pub acceptance_rates: [Option<f64>; 2],
    pub proposal_sds: [f64; 2],
    pub seed: u64,
    pub burnin: usize,
    pub iterations: usize,
    pub timings: Timings,
    /// Achieved projector rank per θ atom combination.
    pub projector_ranks: Vec<(Vec<f64>, usize)>,
}

pub fn parameter_names(p: usize, n_theta: usize) -> Vec<String> {
    let mut names: Vec<String> = (0..p).map(|j| format!("beta_{j}")).collect();
    names.push("tau2".into());
    names.push("sigma2".into());
    if n_theta == 1 {
        names.push("lambda".into());
    } else {
        names.extend((1..=n_theta).map(|k| format!("lambda{k}")));
    }
    names
}

impl Chain {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn n_theta(&self) -> usize {
        self.names.len() - self.p - 2
    }

    pub fn params(&self, i: usize) -> Params {
        let row = &self.draws[i];
        Params {
            beta: row[..self.p].to_vec(),
            tau2: row[self.p],
            sigma2: row[self.p + 1],
            theta: row[self.p + 2..].to_vec(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.names.iter().position(|c| c == name)?;
        Some(self.draws.iter().map(|r| r[k]).collect())
    }

    /// Componentwise posterior mean (range parameters not snapped).
    pub fn posterior_mean(&self) -> Params {
        let k = self.names.len();
        let mut m = vec![0.0; k];
        for row in &self.draws {
            for (a, b) in m.iter_mut().zip(row) {
                *a += b;
            }
        }
        let len = self.draws.len().max(1) as f64;
        m.iter_mut().for_each(|v| *v /= len);
        Params {
            beta: m[..self.p].to_vec(),
            tau2: m[self.p],
            sigma2: m[self.p + 1],
            theta: m[self.p + 2..].to_vec(),
        }
    }

    /// At most `max` evenly spaced draw indices (all when `max` is None or
    /// not smaller than the chain).
    pub fn thinned_indices(&self, max: Option<usize>) -> Vec<usize> {
        thin(self.len(), max)
    }
}

pub(crate) fn thin(len: usize, max: Option<usize>) -> Vec<usize> {
    match max {
        Some(m) if m > 0 && m < len => (0..m).map(|k| k * len / m).collect(),
        _ => (0..len).collect(),
    }
}

/// Conditional posterior mean and covariance of β.
pub fn beta_conditional(
    data: &RegressionData,
    cov: &StructuredCov,
    prior: &PriorSpec,
) -> Result<(Vec<f64>, Mat<f64>)> {
    let (mean, chol) = beta_moments(data, cov, prior)?;
    let p = mean.len();
    let mut c = Mat::<f64>::identity(p, p);
    dense::solve_factor_in_place(chol.as_ref(), c.as_mut());
    Ok((mean, c))
}

// Mean and Cholesky factor of the conditional precision.
fn beta_moments(
    data: &RegressionData,
    cov: &StructuredCov,
    prior: &PriorSpec,
) -> Result<(Vec<f64>, Mat<f64>)> {
    let p = data.p();
    let n = data.n();
    if prior.beta.mean.len() != p {
        return Err(Error::usage("beta prior dimension does not match X"));
    }
    let x = data.x();
    let rhs = Mat::from_fn(n, p + 1, |i, j| if j < p { x[(i, j)] } else { data.y()[i] });
    let s = cov.solve(rhs.as_ref())?;
    let xts = dense::at_b(x.as_ref(), s.as_ref());
    let prec = Mat::from_fn(p, p, |i, j| {
        prior.beta.precision[(i, j)] + 0.5 * (xts[(i, j)] + xts[(j, i)])
    });
    let chol = dense::cholesky(prec.as_ref(), "conditional precision of beta")?;
    let mut b = Mat::from_fn(p, 1, |i, _| {
        let pm: f64 = (0..p).map(|j| prior.beta.precision[(i, j)] * prior.beta.mean[j]).sum();
        pm + xts[(i, p)]
    });
    dense::solve_factor_in_place(chol.as_ref(), b.as_mut());
    Ok(((0..p).map(|i| b[(i, 0)]).collect(), chol))
}

/// β draw `μ + L'⁻¹ z` where `L L'` is the conditional precision and `z` the
/// supplied standard normal variates.
pub fn beta_draw_from_normals(
    data: &RegressionData,
    cov: &StructuredCov,
    prior: &PriorSpec,
    z: &[f64],
) -> Result<Vec<f64>> {
    let (mean, chol) = beta_moments(data, cov, prior)?;
    let p = mean.len();
    if z.len() != p {
        return Err(Error::usage("need one normal variate per coefficient"));
    }
    let mut v = dense::column_vector(z);
    faer::linalg::triangular_solve::solve_upper_triangular_in_place(
        chol.transpose(),
        v.as_mut(),
        faer::Par::Seq,
    );
    Ok((0..p).map(|i| mean[i] + v[(i, 0)]).collect())
}

/// Exact draw from the conditional of β.
pub fn gibbs_beta<R: Rng + ?Sized>(
    data: &RegressionData,
    params: &Params,
    cov: &StructuredCov,
    prior: &PriorSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if params.beta.len() != data.p() {
        return Err(Error::usage("beta length does not match X"));
    }
    let z: Vec<f64> = (0..data.p()).map(|_| StandardNormal.sample(rng)).collect();
    beta_draw_from_normals(data, cov, prior, &z)
}

fn log_lik(data: &RegressionData, beta: &[f64], cov: &StructuredCov) -> Result<f64> {
    gaussian_log_density(&data.residual(beta), cov)
}

fn ratio_to_probability(log_ratio: f64) -> f64 {
    if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    }
}

fn variance_log_ratio(
    ll_cur: f64,
    ll_cand: f64,
    prior: &InverseGamma,
    cur: f64,
    cand: f64,
) -> f64 {
    (ll_cand - ll_cur) + prior.log_density(cand) - prior.log_density(cur)
}

/// MH acceptance probability of moving τ² to `candidate`.
pub fn tau2_acceptance_probability(
    data: &RegressionData,
    params: &Params,
    template: &CovTemplate,
    prior: &PriorSpec,
    candidate: f64,
) -> Result<f64> {
    if !(candidate > 0.0) {
        return Ok(0.0);
    }
    if candidate == params.tau2 {
        return Ok(1.0);
    }
    let cur = log_lik(data, &params.beta, &template.instantiate(params.sigma2, params.tau2))?;
    let cand = log_lik(data, &params.beta, &template.instantiate(params.sigma2, candidate))?;
    Ok(ratio_to_probability(variance_log_ratio(
        cur, cand, &prior.tau2, params.tau2, candidate,
    )))
}

/// MH acceptance probability of moving σ² to `candidate`.
pub fn sigma2_acceptance_probability(
    data: &RegressionData,
    params: &Params,
    template: &CovTemplate,
    prior: &PriorSpec,
    candidate: f64,
) -> Result<f64> {
    if !(candidate > 0.0) {
        return Ok(0.0);
    }
    if candidate == params.sigma2 {
        return Ok(1.0);
    }
    let cur = log_lik(data, &params.beta, &template.instantiate(params.sigma2, params.tau2))?;
    let cand = log_lik(data, &params.beta, &template.instantiate(candidate, params.tau2))?;
    Ok(ratio_to_probability(variance_log_ratio(
        cur, cand, &prior.sigma2, params.sigma2, candidate,
    )))
}

/// One random-walk MH step for τ².
pub fn mh_tau2<R: Rng + ?Sized>(
    data: &RegressionData,
    params: &Params,
    template: &CovTemplate,
    prior: &PriorSpec,
    proposal_sd: f64,
    rng: &mut R,
) -> Result<(f64, bool)> {
    let z: f64 = StandardNormal.sample(rng);
    let cand = params.tau2 + proposal_sd * z;
    let prob = tau2_acceptance_probability(data, params, template, prior, cand)?;
    let u: f64 = rng.random();
    Ok(if u < prob { (cand, true) } else { (params.tau2, false) })
}

/// One random-walk MH step for σ².
pub fn mh_sigma2<R: Rng + ?Sized>(
    data: &RegressionData,
    params: &Params,
    template: &CovTemplate,
    prior: &PriorSpec,
    proposal_sd: f64,
    rng: &mut R,
) -> Result<(f64, bool)> {
    let z: f64 = StandardNormal.sample(rng);
    let cand = params.sigma2 + proposal_sd * z;
    let prob = sigma2_acceptance_probability(data, params, template, prior, cand)?;
    let u: f64 = rng.random();
    Ok(if u < prob { (cand, true) } else { (params.sigma2, false) })
}

/// Normalized probabilities from log weights via log-sum-exp.
pub fn normalize_log_weights(logw: &[f64]) -> Result<Vec<f64>> {
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::Numerical(
            "every atom has zero posterior weight".into(),
        ));
    }
    let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

fn categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

fn current_index(model: &CovarianceModel, theta: &[f64]) -> Result<Vec<usize>> {
    model.index_of(theta).ok_or_else(|| {
        Error::usage(format!("range parameters {theta:?} are not prior atoms"))
    })
}

// Log-likelihood and covariance at every atom of `component`.
fn lambda_candidates(
    data: &RegressionData,
    params: &Params,
    model: &CovarianceModel,
    component: usize,
) -> Result<Vec<(f64, Arc<CovTemplate>, StructuredCov)>> {
    let base = current_index(model, &params.theta)?;
    let atoms = model
        .atoms()
        .get(component)
        .ok_or_else(|| Error::usage(format!("no range parameter {component}")))?;
    (0..atoms.len())
        .map(|i| {
            let mut idx = base.clone();
            idx[component] = i;
            let t = model.template(&idx)?;
            let cov = t.instantiate(params.sigma2, params.tau2);
            let ll = log_lik(data, &params.beta, &cov)?;
            Ok((ll, t, cov))
        })
        .collect()
}

/// Conditional probabilities of each atom of range parameter `component`
/// (uniform prior, so proportional to the likelihood).
pub fn lambda_probabilities(
    data: &RegressionData,
    params: &Params,
    model: &CovarianceModel,
    component: usize,
) -> Result<Vec<f64>> {
    let lls: Vec<f64> = lambda_candidates(data, params, model, component)?
        .into_iter()
        .map(|c| c.0)
        .collect();
    normalize_log_weights(&lls)
}

/// Draws range parameter `component` from its discrete conditional; returns
/// the new value.
pub fn gibbs_lambda_discrete<R: Rng + ?Sized>(
    data: &RegressionData,
    params: &Params,
    model: &CovarianceModel,
    component: usize,
    rng: &mut R,
) -> Result<f64> {
    let probs = lambda_probabilities(data, params, model, component)?;
    Ok(model.atoms()[component][categorical(&probs, rng)])
}

struct State {
    params: Params,
    idx: Vec<usize>,
    template: Arc<CovTemplate>,
    cov: StructuredCov,
    loglik: f64,
}

fn median_atom(atoms: &[f64]) -> usize {
    let mut order: Vec<usize> = (0..atoms.len()).collect();
    order.sort_by(|&a, &b| atoms[a].total_cmp(&atoms[b]));
    order[(atoms.len() - 1) / 2]
}

/// Starting point: OLS β, an even split of the OLS residual variance between
/// τ² and σ², and the median atom of each range parameter, unless overridden.
pub fn initial_params(
    data: &RegressionData,
    model: &CovarianceModel,
    init: &InitialValues,
) -> Result<Params> {
    let (ols_beta, s2) = data.ols()?;
    let half = 0.5 * s2.max(f64::MIN_POSITIVE);
    let theta = match &init.theta {
        Some(t) => t.clone(),
        None => model
            .atoms()
            .iter()
            .map(|a| a[median_atom(a)])
            .collect(),
    };
    let params = Params {
        beta: init.beta.clone().unwrap_or(ols_beta),
        tau2: init.tau2.unwrap_or(half),
        sigma2: init.sigma2.unwrap_or(half),
        theta,
    };
    if params.beta.len() != data.p() {
        return Err(Error::config(format!(
            "initial beta has {} entries, X has {} columns",
            params.beta.len(),
            data.p()
        )));
    }
    if !params.in_support() {
        return Err(Error::config(format!("initial values outside the support: {params:?}")));
    }
    Ok(params)
}

/// Runs the sampler for `config.iterations` sweeps and keeps the draws after
/// `config.burnin`.
pub fn run_chain(
    data: &RegressionData,
    prior: &PriorSpec,
    config: &SamplerConfig,
    model: &Arc<CovarianceModel>,
) -> Result<Chain> {
    config.validate()?;
    prior.validate()?;
    if model.locations().len() != data.n() {
        return Err(Error::usage("covariance model and data have different sizes"));
    }
    let mut rng = rng_stream(config.seed, SAMPLER_STREAM);
    let mut timings = Timings {
        projector_setup: model.setup_seconds(),
        ..Timings::default()
    };
    let start = Instant::now();
    let fail = |sweep: usize| move |e: Error| Error::Sampler { sweep, source: Box::new(e) };

    let params = initial_params(data, model, &config.init)?;
    let idx = current_index(model, &params.theta)?;
    let template = model.template(&idx)?;
    let cov = template.instantiate(params.sigma2, params.tau2);
    let t0 = Instant::now();
    let loglik = log_lik(data, &params.beta, &cov)?;
    timings.factorization += t0.elapsed().as_secs_f64();
    let mut st = State {
        params,
        idx,
        template,
        cov,
        loglik,
    };

    let mut sds = config.proposal_sd;
    let mut window = [0usize; 2];
    let mut kept_accepts = [0usize; 2];
    let n_theta = st.params.theta.len();
    let names = parameter_names(data.p(), n_theta);
    let kept = config.iterations - config.burnin;
    let mut draws = Vec::with_capacity(kept);
    let mut lls = Vec::with_capacity(kept);

    for sweep in 0..config.iterations {
        if config.stages.beta {
            st.params.beta = gibbs_beta(data, &st.params, &st.cov, prior, &mut rng).map_err(fail(sweep))?;
            st.loglik = log_lik(data, &st.params.beta, &st.cov).map_err(fail(sweep))?;
        }
        for stage in 0..2 {
            let enabled = if stage == 0 { config.stages.tau2 } else { config.stages.sigma2 };
            if !enabled {
                continue;
            }
            let z: f64 = StandardNormal.sample(&mut rng);
            let cur = if stage == 0 { st.params.tau2 } else { st.params.sigma2 };
            let cand = cur + sds[stage] * z;
            let u: f64 = rng.random();
            let accepted = if !(cand > 0.0) {
                false
            } else if cand == cur {
                true
            } else {
                let (s2, t2) = if stage == 0 {
                    (st.params.sigma2, cand)
                } else {
                    (cand, st.params.tau2)
                };
                let cov = st.template.instantiate(s2, t2);
                let t0 = Instant::now();
                let ll = log_lik(data, &st.params.beta, &cov).map_err(fail(sweep))?;
                timings.factorization += t0.elapsed().as_secs_f64();
                let ig = if stage == 0 { &prior.tau2 } else { &prior.sigma2 };
                let prob = ratio_to_probability(variance_log_ratio(st.loglik, ll, ig, cur, cand));
                if u < prob {
                    st.cov = cov;
                    st.loglik = ll;
                    if stage == 0 {
                        st.params.tau2 = cand;
                    } else {
                        st.params.sigma2 = cand;
                    }
                    true
                } else {
                    false
                }
            };
            if accepted {
                window[stage] += 1;
                if sweep >= config.burnin {
                    kept_accepts[stage] += 1;
                }
            }
        }
        if config.stages.theta {
            for component in 0..n_theta {
                if model.atoms()[component].len() < 2 {
                    continue;
                }
                let t0 = Instant::now();
                let cands = lambda_candidates(data, &st.params, model, component).map_err(fail(sweep))?;
                timings.factorization += t0.elapsed().as_secs_f64();
                let lls_c: Vec<f64> = cands.iter().map(|c| c.0).collect();
                let probs = normalize_log_weights(&lls_c).map_err(fail(sweep))?;
                let pick = categorical(&probs, &mut rng);
                let (ll, template, cov) = cands.into_iter().nth(pick).expect("pick in range");
                st.idx[component] = pick;
                st.params.theta[component] = model.atoms()[component][pick];
                st.template = template;
                st.cov = cov;
                st.loglik = ll;
            }
        }

        if config.adapt && sweep < config.burnin && (sweep + 1) % config.adapt_interval == 0 {
            for stage in 0..2 {
                let rate = window[stage] as f64 / config.adapt_interval as f64;
                sds[stage] *= (rate - config.target_acceptance).exp();
            }
            window = [0, 0];
        }
        if sweep >= config.burnin {
            let mut row = st.params.beta.clone();
            row.push(st.params.tau2);
            row.push(st.params.sigma2);
            row.extend_from_slice(&st.params.theta);
            draws.push(row);
            lls.push(st.loglik);
        }
        if sweep + 1 == config.burnin || (sweep + 1) % 1000 == 0 {
            log::debug!(
                "sweep {} / {}: tau2 = {:.4}, sigma2 = {:.4}, sd = {:?}",
                sweep + 1,
                config.iterations,
                st.params.tau2,
                st.params.sigma2,
                sds
            );
        }
    }
    timings.sweeps = start.elapsed().as_secs_f64();
    let rates = [
        config.stages.tau2.then(|| kept_accepts[0] as f64 / kept as f64),
        config.stages.sigma2.then(|| kept_accepts[1] as f64 / kept as f64),
    ];
    let _ = &st.idx;
    Ok(Chain {
        names,
        draws,
        log_likelihood: lls,
        p: data.p(),
        acceptance_rates: rates,
        proposal_sds: sds,
        seed: config.seed,
        burnin: config.burnin,
        iterations: config.iterations,
        timings,
        projector_ranks: model.ranks(),
    })
}

/// `1 + 2 Σ ρ(t)` truncated by Geyer's initial positive sequence; None for a
/// constant or too-short series.
pub fn inefficiency_factor(series: &[f64]) -> Option<f64> {
    let n = series.len();
    if n < 10 {
        return None;
    }
    if series.iter().all(|&v| v == series[0]) {
        return None;
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let c: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let acov = |lag: usize| -> f64 {
        c[..n - lag].iter().zip(&c[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
    };
    let g0 = acov(0);
    if !(g0 > 0.0) {
        return None;
    }
    let mut sum = 0.0;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = if k == 0 { g0 + acov(1) } else { acov(2 * k) + acov(2 * k + 1) };
        if pair <= 0.0 {
            break;
        }
        sum += pair;
        k += 1;
    }
    Some(((-g0 + 2.0 * sum) / g0).max(0.0))
}

/// Type-7 quantile of an ascending slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    let h = (n as f64 - 1.0) * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, q)
}

/// Per-parameter posterior summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
    pub inefficiency: Option<f64>,
}

pub fn summarize(chain: &Chain) -> Vec<ParamSummary> {
    chain
        .names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let col: Vec<f64> = chain.draws.iter().map(|r| r[k]).collect();
            let n = col.len().max(1) as f64;
            let mean = col.iter().sum::<f64>() / n;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0);
            ParamSummary {
                name: name.clone(),
                mean,
                sd: var.sqrt(),
                q025: quantile(&col, 0.025),
                q975: quantile(&col, 0.975),
                inefficiency: inefficiency_factor(&col),
            }
        })
        .collect()
}
