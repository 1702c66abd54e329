//! Subcommand drivers: simulate, fit, predict, approx-error, diagnostics.
//!
//! Every artifact gets a `.meta.txt` sidecar holding the seed, timings and
//! the resolved configuration.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::RngCore;

use crate::approx::{ApproxSpec, CovarianceModel};
use crate::config::ExperimentConfig;
use crate::covariance::{gram_matrix, taper_matrix, Locations};
use crate::io;
use crate::lowrank::{self, adaptive_range_finder, Projector};
use crate::mcmc::{self, Chain};
use crate::predict;
use crate::simdata::{SimulationDesign, SpatialDataset};
use crate::{rng_stream, Error, Result, PROJECTOR_STREAM, SIMULATION_STREAM};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Fit,
    Predict,
    ApproxError,
    Diagnostics,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Fit => "fit",
            Command::Predict => "predict",
            Command::ApproxError => "approx-error",
            Command::Diagnostics => "diagnostics",
        }
    }
}

/// Bounds worker threads for matrix builds and prediction. Only the first
/// call in a process takes effect for the rayon pool.
pub fn set_threads(n: usize) {
    let n = n.max(1);
    if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
        log::debug!("rayon pool already initialised");
    }
    faer::set_global_parallelism(if n == 1 {
        faer::Par::Seq
    } else {
        faer::Par::rayon(n)
    });
}

/// Runs one subcommand and returns the files it wrote.
pub fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    cfg.check_files()?;
    match cmd {
        Command::Simulate => simulate(cfg, out),
        Command::Fit => fit(cfg, out).map(|(files, _)| files),
        Command::Predict => predict_cmd(cfg, out),
        Command::ApproxError => approx_error(cfg, out),
        Command::Diagnostics => diagnostics(cfg, out),
    }
}

/// Training/test data either read from CSV or simulated from the config seed.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub train: SpatialDataset,
    pub test: Option<SpatialDataset>,
    pub intercept: bool,
    pub truth: Option<SimulationDesign>,
    pub full: Option<SpatialDataset>,
}

pub fn load_inputs(cfg: &ExperimentConfig) -> Result<Inputs> {
    if let Some(d) = &cfg.data {
        let train = io::read_dataset(&d.train)?;
        let test = d.test.as_deref().map(io::read_dataset).transpose()?;
        return Ok(Inputs {
            train,
            test,
            intercept: d.intercept,
            truth: cfg.simulation.as_ref().map(|s| s.design()).transpose()?,
            full: None,
        });
    }
    let sim = cfg
        .simulation
        .as_ref()
        .ok_or_else(|| Error::config("config needs a [data] or a [simulation] block"))?;
    let design = sim.design()?;
    let mut rng = rng_stream(cfg.seed, SIMULATION_STREAM);
    let (full, train, test) = design.generate(&mut rng)?;
    Ok(Inputs {
        train: full.subset(&train),
        test: Some(full.subset(&test)),
        intercept: design.intercept,
        truth: Some(design),
        full: Some(full),
    })
}

fn meta(cmd: Command, cfg: &ExperimentConfig, extra: &[(String, String)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# subcommand: {}", cmd.name());
    let _ = writeln!(s, "# seed: {}", cfg.seed);
    for (k, v) in extra {
        let _ = writeln!(s, "# {k}: {v}");
    }
    let _ = writeln!(s, "# resolved configuration follows");
    s.push_str(&cfg.echo());
    s
}

/// Strips the comment header of a sidecar written by this module and parses
/// the echoed configuration.
pub fn config_from_meta(text: &str) -> Result<ExperimentConfig> {
    let body: String = text
        .lines()
        .skip_while(|l| l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect();
    ExperimentConfig::from_toml(&body)
}

fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let inputs = load_inputs(cfg)?;
    let full = inputs
        .full
        .as_ref()
        .ok_or_else(|| Error::config("simulate needs a [simulation] block and no [data] block"))?;
    let files = [out.join("dataset.csv"), out.join("train.csv"), out.join("test.csv")];
    io::write_dataset(&files[0], full)?;
    io::write_dataset(&files[1], &inputs.train)?;
    if let Some(test) = &inputs.test {
        io::write_dataset(&files[2], test)?;
    }
    let design = inputs.truth.as_ref().expect("simulated inputs carry their design");
    let extra = vec![
        ("design".into(), design.name.clone()),
        ("n".into(), full.len().to_string()),
        ("n_train".into(), inputs.train.len().to_string()),
        ("seconds".into(), format!("{:.3}", start.elapsed().as_secs_f64())),
    ];
    let m = out.join("dataset.meta.txt");
    io::write_text(&m, &meta(Command::Simulate, cfg, &extra))?;
    let mut v = files.to_vec();
    v.push(m);
    Ok(v)
}

pub fn build_model(cfg: &ExperimentConfig, locs: Arc<Locations>) -> Result<CovarianceModel> {
    CovarianceModel::new(
        locs,
        cfg.kernel.spec()?,
        cfg.approx.spec()?,
        cfg.atoms()?,
        cfg.seed,
    )
}

/// Runs the sampler on the training data and writes `chain.csv`,
/// `chain.meta.txt` and `summary.csv`.
pub fn fit(cfg: &ExperimentConfig, out: &Path) -> Result<(Vec<PathBuf>, Chain)> {
    let inputs = load_inputs(cfg)?;
    let data = inputs.train.to_regression(inputs.intercept)?;
    let prior = cfg.prior_spec(data.p())?;
    let sampler = cfg.sampler()?;
    let model = Arc::new(build_model(cfg, Arc::new(data.locations().clone()))?);
    let chain = mcmc::run_chain(&data, &prior, &sampler, &model)?;

    let chain_path = out.join("chain.csv");
    io::write_chain(&chain_path, &chain)?;
    let summary_path = out.join("summary.csv");
    write_summary(&summary_path, &chain)?;

    let t = chain.timings;
    let mut extra = vec![
        ("method".into(), cfg.approx.spec()?.label()),
        ("n".into(), data.n().to_string()),
        ("iterations".into(), chain.iterations.to_string()),
        ("burnin".into(), chain.burnin.to_string()),
        ("kept".into(), chain.len().to_string()),
        ("projector_seconds".into(), format!("{:.3}", t.projector_setup)),
        ("factorization_seconds".into(), format!("{:.3}", t.factorization)),
        ("sweep_seconds".into(), format!("{:.3}", t.sweeps)),
    ];
    for (name, rate) in ["tau2", "sigma2"].iter().zip(chain.acceptance_rates) {
        if let Some(r) = rate {
            extra.push((format!("acceptance_{name}"), format!("{r:.4}")));
        }
    }
    for (name, sd) in ["tau2", "sigma2"].iter().zip(chain.proposal_sds) {
        extra.push((format!("proposal_sd_{name}"), io::number(sd)));
    }
    if let Some(max) = chain.projector_ranks.iter().map(|(_, r)| *r).max() {
        let min = chain.projector_ranks.iter().map(|(_, r)| *r).min().unwrap_or(max);
        extra.push(("projector_rank_range".into(), format!("{min}..{max}")));
    }
    let meta_path = out.join("chain.meta.txt");
    io::write_text(&meta_path, &meta(Command::Fit, cfg, &extra))?;
    Ok((vec![chain_path, meta_path, summary_path], chain))
}

fn write_summary(path: &Path, chain: &Chain) -> Result<()> {
    let rows: Vec<Vec<String>> = mcmc::summarize(chain)
        .into_iter()
        .map(|s| {
            vec![
                s.name,
                io::number(s.mean),
                io::number(s.sd),
                io::number(s.q025),
                io::number(s.q975),
                s.inefficiency.map(io::number).unwrap_or_default(),
            ]
        })
        .collect();
    io::write_table(path, &["parameter", "mean", "sd", "q025", "q975", "inefficiency"], &rows)
}

fn load_chain(cfg: &ExperimentConfig, out: &Path) -> Result<Chain> {
    let path = cfg.predict.chain.clone().unwrap_or_else(|| out.join("chain.csv"));
    if !path.exists() {
        return Err(Error::usage(format!(
            "no chain at {} (run fit first or set predict.chain)",
            path.display()
        )));
    }
    io::read_chain(&path)
}

/// MSPE and DIC report (`mspe.csv`) plus an optional predictive surface.
fn predict_cmd(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let chain = load_chain(cfg, out)?;
    let inputs = load_inputs(cfg)?;
    let train = inputs.train.to_regression(inputs.intercept)?;
    if chain.p != train.p() {
        return Err(Error::usage(format!(
            "chain has {} regression coefficients, data design has {}",
            chain.p,
            train.p()
        )));
    }
    let model = build_model(cfg, Arc::new(train.locations().clone()))?;
    let label = cfg.approx.spec()?.label();
    let mut files = Vec::new();
    let mut extra = vec![("method".into(), label.clone())];

    let start = Instant::now();
    let (dic, p_d) = predict::dic(&chain, &train, &model)?;
    let mut row = vec![label.clone()];
    match &inputs.test {
        Some(test) => {
            let test = test.to_regression(inputs.intercept)?;
            let m = predict::mspe(&test, &chain, &train, &model, cfg.predict.max_draws, cfg.seed)?;
            row.push(test.n().to_string());
            row.push(io::number(m));
        }
        None => {
            row.push("0".into());
            row.push(String::new());
        }
    }
    row.push(io::number(dic));
    row.push(io::number(p_d));
    let secs = start.elapsed().as_secs_f64();
    row.push(format!("{secs:.3}"));
    let report = out.join("mspe.csv");
    io::write_table(&report, &["method", "n_test", "mspe", "dic", "p_d", "seconds"], &[row])?;
    files.push(report);
    extra.push(("prediction_seconds".into(), format!("{secs:.3}")));

    if let Some(g) = &cfg.predict.grid {
        let start = Instant::now();
        let gx = g.covariates.as_deref().map(io::read_matrix).transpose()?;
        let bounds = [(g.bounds[0][0], g.bounds[0][1]), (g.bounds[1][0], g.bounds[1][1])];
        let s = predict::surface_grid(
            bounds,
            g.resolution,
            &chain,
            &train,
            &model,
            gx.as_ref(),
            g.max_draws,
            cfg.seed,
        )?;
        let path = out.join("surface.csv");
        io::write_surface(&path, &s)?;
        files.push(path);
        extra.push(("surface_draws".into(), s.draws.to_string()));
        extra.push(("surface_seconds".into(), format!("{:.3}", start.elapsed().as_secs_f64())));
    }
    let meta_path = out.join("predict.meta.txt");
    io::write_text(&meta_path, &meta(Command::Predict, cfg, &extra))?;
    files.push(meta_path);
    Ok(files)
}

/// One row of the approximation-error report.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxErrorRow {
    pub label: String,
    pub eps: Option<f64>,
    pub gamma: Option<f64>,
    pub rank: usize,
    pub sparsity_pct: Option<f64>,
    pub frobenius: f64,
    pub kl: f64,
    /// None when the measured error is not below τ².
    pub kl_bound: Option<f64>,
}

/// Frobenius error, KL divergence and the KL bound of each method against
/// the exact Gram matrix `Σ_W` at `locs`. Methods with the same `(ε, r)`
/// share one projector.
pub fn approx_error_rows(
    locs: &Locations,
    kernel: &crate::KernelSpec,
    tau2: f64,
    methods: &[ApproxSpec],
    seed: u64,
) -> Result<Vec<ApproxErrorRow>> {
    let gram = gram_matrix(locs, kernel)?;
    let n = locs.len();
    let mut exact = gram.clone();
    for i in 0..n {
        exact[(i, i)] += tau2;
    }
    let zero = vec![0.0; n];
    let proj_seed = rng_stream(seed, PROJECTOR_STREAM).next_u64();
    let mut projectors: HashMap<(u64, usize), Projector> = HashMap::new();
    let mut rows = Vec::with_capacity(methods.len());
    for spec in methods {
        let mut get_phi = |eps: f64, r: usize| -> Result<Projector> {
            let key = (eps.to_bits(), r);
            if let Some(p) = projectors.get(&key) {
                return Ok(p.clone());
            }
            let p = adaptive_range_finder(gram.as_ref(), eps, r, proj_seed)?;
            projectors.insert(key, p.clone());
            Ok(p)
        };
        let taper = spec.taper().map(|t| taper_matrix(locs, &t)).transpose()?;
        let (cov, eps) = match *spec {
            ApproxSpec::Exact => (lowrank::build_exact(gram.as_ref(), tau2)?, None),
            ApproxSpec::Lp { eps, r } => {
                let phi = get_phi(eps, r)?;
                (lowrank::build_lp(gram.as_ref(), &phi, tau2)?, Some(eps))
            }
            ApproxSpec::Ct { .. } => (
                lowrank::build_ct(gram.as_ref(), taper.as_ref().expect("ct has a taper"), tau2)?,
                None,
            ),
            ApproxSpec::Mlp { eps, r, .. } => {
                let phi = get_phi(eps, r)?;
                let t = taper.as_ref().expect("mlp has a taper");
                (lowrank::build_mlp(gram.as_ref(), &phi, t, tau2)?, Some(eps))
            }
        };
        let frobenius = lowrank::frobenius_error(gram.as_ref(), &cov)?;
        let approx = cov.densify_with_nugget()?;
        let kl = lowrank::kl_gaussian(&zero, exact.as_ref(), &zero, approx.as_ref())?;
        let kl_bound = if frobenius < tau2 {
            Some(lowrank::kl_bound(n, frobenius, tau2)?)
        } else {
            None
        };
        rows.push(ApproxErrorRow {
            label: spec.label(),
            eps,
            gamma: spec.taper().map(|t| t.gamma),
            rank: cov.rank(),
            sparsity_pct: taper.as_ref().map(|t| t.sparsity_pct()),
            frobenius,
            kl,
            kl_bound,
        });
    }
    Ok(rows)
}

fn approx_error(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let start = Instant::now();
    let ae = cfg
        .approx_error
        .as_ref()
        .ok_or_else(|| Error::config("approx-error needs an [approx_error] block"))?;
    if ae.methods.is_empty() {
        return Err(Error::config("approx_error.methods is empty"));
    }
    let inputs = load_inputs(cfg)?;
    let n = ae.n.unwrap_or(inputs.train.len()).min(inputs.train.len());
    let idx: Vec<usize> = (0..n).collect();
    let locs = inputs.train.locations.subset(&idx);

    let truth = inputs.truth.as_ref();
    let mut kernel = match truth {
        Some(d) => d.kernel,
        None => cfg.kernel.spec()?,
    };
    if let Some(s2) = ae.sigma2 {
        kernel = kernel.with_sigma2(s2);
    }
    if let Some(l) = &ae.lambda {
        kernel = kernel.with_ranges(l);
    }
    kernel.validate()?;
    let tau2 = ae.tau2.or(truth.map(|d| d.tau2)).unwrap_or(1.0);
    let specs: Vec<ApproxSpec> = ae.methods.iter().map(|m| m.spec()).collect::<Result<_>>()?;
    let rows = approx_error_rows(&locs, &kernel, tau2, &specs, cfg.seed)?;

    let opt = |v: Option<f64>| v.map(io::number).unwrap_or_default();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                opt(r.eps),
                opt(r.gamma),
                r.rank.to_string(),
                opt(r.sparsity_pct),
                io::number(r.frobenius),
                io::number(r.kl),
                opt(r.kl_bound),
            ]
        })
        .collect();
    let path = out.join("approx_error.csv");
    io::write_table(
        &path,
        &["method", "eps", "gamma", "rank", "sparsity_pct", "frobenius", "kl", "kl_bound"],
        &table,
    )?;
    let extra = vec![
        ("n".into(), n.to_string()),
        ("sigma2".into(), io::number(kernel.sigma2())),
        ("tau2".into(), io::number(tau2)),
        ("ranges".into(), format!("{:?}", kernel.ranges())),
        ("seconds".into(), format!("{:.3}", start.elapsed().as_secs_f64())),
    ];
    let meta_path = out.join("approx_error.meta.txt");
    io::write_text(&meta_path, &meta(Command::ApproxError, cfg, &extra))?;
    Ok(vec![path, meta_path])
}

/// Fraction of successive draws that differ (the MH acceptance rate for a
/// random-walk stage).
pub fn change_rate(series: &[f64]) -> Option<f64> {
    if series.len() < 2 {
        return None;
    }
    let moves = series.windows(2).filter(|w| w[0] != w[1]).count();
    Some(moves as f64 / (series.len() - 1) as f64)
}

fn diagnostics(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let chain = load_chain(cfg, out)?;
    let rows: Vec<Vec<String>> = mcmc::summarize(&chain)
        .into_iter()
        .map(|s| {
            let series = chain.column(&s.name).unwrap_or_default();
            vec![
                s.name,
                io::number(s.mean),
                io::number(s.sd),
                s.inefficiency.map(io::number).unwrap_or_default(),
                change_rate(&series).map(io::number).unwrap_or_default(),
            ]
        })
        .collect();
    let path = out.join("diagnostics.csv");
    io::write_table(&path, &["parameter", "mean", "sd", "inefficiency", "change_rate"], &rows)?;
    let meta_path = out.join("diagnostics.meta.txt");
    let extra = vec![("draws".into(), chain.len().to_string())];
    io::write_text(&meta_path, &meta(Command::Diagnostics, cfg, &extra))?;
    Ok(vec![path, meta_path])
}
