//! Experiment configuration (TOML). Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::approx::ApproxSpec;
use crate::covariance::{KernelSpec, RegionRule, TaperKind, TaperSpec};
use crate::mcmc::{InitialValues, SamplerConfig, Stages};
use crate::model::{InverseGamma, NormalPrior, PriorSpec};
use crate::simdata::SimulationDesign;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub data: Option<DataConfig>,
    pub simulation: Option<SimulationConfig>,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub prior: PriorConfig,
    pub approx: ApproxConfig,
    #[serde(default)]
    pub mcmc: McmcConfig,
    #[serde(default)]
    pub predict: PredictConfig,
    pub approx_error: Option<ApproxErrorConfig>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub train: PathBuf,
    pub test: Option<PathBuf>,
    /// Prepend a column of ones to the stored covariates.
    #[serde(default = "yes")]
    pub intercept: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DesignName {
    Sim1Strong,
    Sim1Weak,
    Sim2,
}

/// Simulation block: a named design with optional overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub design: DesignName,
    /// Total points (single-domain designs only).
    pub n: Option<usize>,
    pub n_train: Option<usize>,
    /// Side length of the square domain `[0, domain]²` (single-domain designs).
    pub domain: Option<f64>,
    pub sigma2: Option<f64>,
    pub tau2: Option<f64>,
    pub lambda: Option<f64>,
    pub beta: Option<Vec<f64>>,
}

impl SimulationConfig {
    pub fn design(&self) -> Result<SimulationDesign> {
        let mut d = match self.design {
            DesignName::Sim1Strong => SimulationDesign::simulation1(true),
            DesignName::Sim1Weak => SimulationDesign::simulation1(false),
            DesignName::Sim2 => SimulationDesign::simulation2(),
        };
        let single = d.counts.len() == 1;
        if let Some(n) = self.n {
            if !single {
                return Err(Error::config("simulation.n applies to single-domain designs only"));
            }
            d.counts = vec![n];
            if self.n_train.is_none() {
                d.train_counts = vec![(3 * n) / 4];
            }
        }
        if let Some(t) = self.n_train {
            if !single {
                return Err(Error::config("simulation.n_train applies to single-domain designs only"));
            }
            d.train_counts = vec![t];
        }
        if let Some(side) = self.domain {
            if !single || !(side > 0.0) {
                return Err(Error::config("simulation.domain must be > 0 for a single-domain design"));
            }
            d.regions = vec![vec![(0.0, side), (0.0, side)]];
        }
        if let Some(s2) = self.sigma2 {
            d.kernel = d.kernel.with_sigma2(s2);
        }
        if let Some(t2) = self.tau2 {
            d.tau2 = t2;
        }
        if let Some(l) = self.lambda {
            if !single {
                return Err(Error::config("simulation.lambda applies to single-range designs only"));
            }
            d.kernel = d.kernel.with_ranges(&[l]);
        }
        if let Some(b) = &self.beta {
            d.beta = b.clone();
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Matern,
    Nonstationary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub family: Family,
    #[serde(default = "half")]
    pub nu: f64,
    /// Fixed range when the prior gives no atoms (Matérn).
    pub lambda: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    #[serde(default)]
    pub region_axis: usize,
    #[serde(default = "default_threshold")]
    pub region_threshold: f64,
}

fn half() -> f64 {
    0.5
}

fn default_threshold() -> f64 {
    RegionRule::default().threshold
}

impl KernelConfig {
    /// Kernel family template (σ² = 1; ranges from the config or 1).
    pub fn spec(&self) -> Result<KernelSpec> {
        let k = match self.family {
            Family::Matern => KernelSpec::Matern {
                sigma2: 1.0,
                nu: self.nu,
                lambda: self.lambda.unwrap_or(1.0),
            },
            Family::Nonstationary => KernelSpec::NonstationaryPs {
                sigma2: 1.0,
                nu: self.nu,
                lambda1: self.lambda1.unwrap_or(1.0),
                lambda2: self.lambda2.unwrap_or(1.0),
                region: RegionRule {
                    axis: self.region_axis,
                    threshold: self.region_threshold,
                },
            },
        };
        k.validate()?;
        Ok(k)
    }

    fn fixed_ranges(&self) -> Option<Vec<f64>> {
        match self.family {
            Family::Matern => self.lambda.map(|l| vec![l]),
            Family::Nonstationary => Some(vec![self.lambda1?, self.lambda2?]),
        }
    }

    fn n_ranges(&self) -> usize {
        match self.family {
            Family::Matern => 1,
            Family::Nonstationary => 2,
        }
    }
}

/// `c_i = 1 / (step · i)` for `i = 1..=count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomRule {
    pub step: f64,
    pub count: usize,
}

impl AtomRule {
    pub fn atoms(&self) -> Vec<f64> {
        (1..=self.count).map(|i| 1.0 / (self.step * i as f64)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorConfig {
    pub beta_mean: Option<Vec<f64>>,
    /// Full prior covariance of β (rows).
    pub beta_cov: Option<Vec<Vec<f64>>>,
    /// Isotropic prior variance of β, used when `beta_cov` is absent.
    #[serde(default = "default_beta_var")]
    pub beta_var: f64,
    #[serde(default = "default_a1")]
    pub a1: f64,
    #[serde(default = "default_b")]
    pub b1: f64,
    #[serde(default = "default_a2")]
    pub a2: f64,
    #[serde(default = "default_b")]
    pub b2: f64,
    /// Explicit atoms for every range parameter.
    pub atoms: Option<Vec<f64>>,
    /// Atoms from the rule `1/(step·i)`, used when `atoms` is absent.
    pub atom_rule: Option<AtomRule>,
}

fn default_beta_var() -> f64 {
    1.0e4
}
fn default_a1() -> f64 {
    1.0
}
fn default_a2() -> f64 {
    0.8
}
fn default_b() -> f64 {
    0.1
}

impl Default for PriorConfig {
    fn default() -> Self {
        PriorConfig {
            beta_mean: None,
            beta_cov: None,
            beta_var: default_beta_var(),
            a1: default_a1(),
            b1: default_b(),
            a2: default_a2(),
            b2: default_b(),
            atoms: None,
            atom_rule: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Lp,
    Ct,
    Mlp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxConfig {
    pub method: Method,
    pub eps: Option<f64>,
    pub r: Option<usize>,
    pub gamma: Option<f64>,
    #[serde(default = "default_taper")]
    pub taper: TaperKind,
}

fn default_taper() -> TaperKind {
    TaperKind::Wendland2
}

impl ApproxConfig {
    pub fn spec(&self) -> Result<ApproxSpec> {
        let need_eps = || -> Result<(f64, usize)> {
            let eps = self
                .eps
                .ok_or_else(|| Error::config("approx.eps is required for lp and mlp"))?;
            let r = self
                .r
                .ok_or_else(|| Error::config("approx.r is required for lp and mlp"))?;
            if !(eps > 0.0) {
                return Err(Error::config("approx.eps must be > 0"));
            }
            if r < 1 {
                return Err(Error::config("approx.r must be >= 1"));
            }
            Ok((eps, r))
        };
        let need_gamma = || -> Result<TaperSpec> {
            let g = self
                .gamma
                .ok_or_else(|| Error::config("approx.gamma is required for ct and mlp"))?;
            TaperSpec::new(self.taper, g)
        };
        Ok(match self.method {
            Method::Exact => ApproxSpec::Exact,
            Method::Lp => {
                let (eps, r) = need_eps()?;
                ApproxSpec::Lp { eps, r }
            }
            Method::Ct => ApproxSpec::Ct { taper: need_gamma()? },
            Method::Mlp => {
                let (eps, r) = need_eps()?;
                ApproxSpec::Mlp {
                    eps,
                    r,
                    taper: need_gamma()?,
                }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcConfig {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_burnin")]
    pub burnin: usize,
    #[serde(default = "default_sd")]
    pub tau2_sd: f64,
    #[serde(default = "default_sd")]
    pub sigma2_sd: f64,
    #[serde(default = "yes")]
    pub adapt: bool,
    #[serde(default = "default_interval")]
    pub adapt_interval: usize,
    #[serde(default = "yes")]
    pub sample_beta: bool,
    #[serde(default = "yes")]
    pub sample_tau2: bool,
    #[serde(default = "yes")]
    pub sample_sigma2: bool,
    #[serde(default = "yes")]
    pub sample_theta: bool,
    pub init_beta: Option<Vec<f64>>,
    pub init_tau2: Option<f64>,
    pub init_sigma2: Option<f64>,
    pub init_theta: Option<Vec<f64>>,
}

fn default_iterations() -> usize {
    5000
}
fn default_burnin() -> usize {
    500
}
fn default_sd() -> f64 {
    0.1
}
fn default_interval() -> usize {
    50
}

impl Default for McmcConfig {
    fn default() -> Self {
        toml::from_str("").expect("all fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// `[[x_lo, x_hi], [y_lo, y_hi]]`.
    pub bounds: [[f64; 2]; 2],
    pub resolution: usize,
    pub max_draws: Option<usize>,
    /// Regressors at each grid point (header row, one column per regressor,
    /// intercept included); required when the model has covariates.
    pub covariates: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    /// Posterior draws used for MSPE (all when absent).
    pub max_draws: Option<usize>,
    pub chain: Option<PathBuf>,
    pub grid: Option<GridConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproxErrorConfig {
    pub methods: Vec<ApproxConfig>,
    /// Use the first `n` training locations.
    pub n: Option<usize>,
    /// Parameters of the reference covariance (default: simulation truth).
    pub sigma2: Option<f64>,
    pub tau2: Option<f64>,
    pub lambda: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    /// Makes relative data paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = &mut self.data {
            fix(&mut d.train);
            if let Some(t) = &mut d.test {
                fix(t);
            }
        }
        if let Some(c) = &mut self.predict.chain {
            fix(c);
        }
        if let Some(g) = &mut self.predict.grid {
            if let Some(c) = &mut g.covariates {
                fix(c);
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.spec()?;
        self.approx.spec()?;
        if let Some(ae) = &self.approx_error {
            for m in &ae.methods {
                m.spec()?;
            }
        }
        self.sampler()?.validate()?;
        if let Some(s) = &self.simulation {
            s.design()?;
        }
        self.prior_spec(self.prior.beta_mean.as_ref().map_or(1, Vec::len))
            .map(|_| ())
            .or_else(|e| match e {
                // β dimension is only known once the data are loaded.
                Error::Config(msg) if msg.contains("beta prior") => Ok(()),
                other => Err(other),
            })?;
        if let Some(g) = &self.predict.grid {
            if g.resolution < 2 {
                return Err(Error::config("predict.grid.resolution must be >= 2"));
            }
        }
        Ok(())
    }

    /// Checks that every referenced input file exists.
    pub fn check_files(&self) -> Result<()> {
        let mut paths: Vec<&PathBuf> = Vec::new();
        if let Some(d) = &self.data {
            paths.push(&d.train);
            paths.extend(d.test.iter());
        }
        if let Some(g) = self.predict.grid.as_ref().and_then(|g| g.covariates.as_ref()) {
            paths.push(g);
        }
        for p in paths {
            if !p.exists() {
                return Err(Error::config(format!("file not found: {}", p.display())));
            }
        }
        Ok(())
    }

    /// Atoms per range parameter: the prior's list or rule, else the fixed
    /// kernel ranges as single atoms.
    pub fn atoms(&self) -> Result<Vec<Vec<f64>>> {
        let k = self.kernel.n_ranges();
        let shared = match (&self.prior.atoms, &self.prior.atom_rule) {
            (Some(a), _) => Some(a.clone()),
            (None, Some(rule)) => Some(rule.atoms()),
            (None, None) => None,
        };
        match shared {
            Some(a) => Ok(vec![a; k]),
            None => self.kernel.fixed_ranges().map(|r| r.into_iter().map(|v| vec![v]).collect()).ok_or_else(|| {
                Error::config("give prior.atoms, prior.atom_rule, or fixed kernel ranges")
            }),
        }
    }

    pub fn prior_spec(&self, p: usize) -> Result<PriorSpec> {
        let c = &self.prior;
        let mean = c.beta_mean.clone().unwrap_or_else(|| vec![0.0; p]);
        if mean.len() != p {
            return Err(Error::config(format!(
                "beta prior mean has {} entries, model has {p} coefficients",
                mean.len()
            )));
        }
        let cov = match &c.beta_cov {
            Some(rows) => {
                if rows.len() != p || rows.iter().any(|r| r.len() != p) {
                    return Err(Error::config(format!("beta prior covariance must be {p}x{p}")));
                }
                faer::Mat::from_fn(p, p, |i, j| rows[i][j])
            }
            None => {
                if !(c.beta_var > 0.0) {
                    return Err(Error::config("beta prior variance must be > 0"));
                }
                faer::Mat::from_fn(p, p, |i, j| if i == j { c.beta_var } else { 0.0 })
            }
        };
        let prior = PriorSpec {
            beta: NormalPrior::new(mean, &cov)?,
            tau2: InverseGamma::new(c.a1, c.b1)?,
            sigma2: InverseGamma::new(c.a2, c.b2)?,
            theta_atoms: self.atoms()?,
        };
        prior.validate()?;
        Ok(prior)
    }

    pub fn sampler(&self) -> Result<SamplerConfig> {
        let m = &self.mcmc;
        let cfg = SamplerConfig {
            iterations: m.iterations,
            burnin: m.burnin,
            proposal_sd: [m.tau2_sd, m.sigma2_sd],
            target_acceptance: 0.40,
            adapt: m.adapt,
            adapt_interval: m.adapt_interval,
            stages: Stages {
                beta: m.sample_beta,
                tau2: m.sample_tau2,
                sigma2: m.sample_sigma2,
                theta: m.sample_theta,
            },
            init: InitialValues {
                beta: m.init_beta.clone(),
                tau2: m.init_tau2,
                sigma2: m.init_sigma2,
                theta: m.init_theta.clone(),
            },
            seed: self.seed,
        };
        Ok(cfg)
    }

    /// Resolved configuration as TOML (for metadata sidecars).
    pub fn echo(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# config not serializable: {e}"))
    }
}
