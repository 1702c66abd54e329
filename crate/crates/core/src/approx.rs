//! Covariance approximation per range-parameter atom: projector table and
//! unit-variance templates that rescale to any (σ², τ²).

use std::collections::{HashMap, VecDeque};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use faer::Mat;
use rand::RngCore;

use crate::covariance::{correlation_matrix, taper_matrix, Kernel, KernelSpec, Locations, TaperMatrix, TaperSpec};
use crate::dense;
use crate::lowrank::{adaptive_range_finder, build_ct, build_exact, build_lp, build_mlp, Form, Projector, StructuredCov};
use crate::{rng_stream, Error, Result, PROJECTOR_STREAM};

/// Approximation method and its tuning constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApproxSpec {
    Exact,
    Lp { eps: f64, r: usize },
    Ct { taper: TaperSpec },
    Mlp { eps: f64, r: usize, taper: TaperSpec },
}

impl ApproxSpec {
    pub fn form(&self) -> Form {
        match self {
            ApproxSpec::Exact => Form::Exact,
            ApproxSpec::Lp { .. } => Form::Lp,
            ApproxSpec::Ct { .. } => Form::Ct,
            ApproxSpec::Mlp { .. } => Form::Mlp,
        }
    }

    pub fn taper(&self) -> Option<TaperSpec> {
        match *self {
            ApproxSpec::Ct { taper } | ApproxSpec::Mlp { taper, .. } => Some(taper),
            _ => None,
        }
    }

    fn range_finder(&self) -> Option<(f64, usize)> {
        match *self {
            ApproxSpec::Lp { eps, r } | ApproxSpec::Mlp { eps, r, .. } => Some((eps, r)),
            _ => None,
        }
    }

    /// Short label such as `mlp(eps=200,r=4,gamma=20)`.
    pub fn label(&self) -> String {
        match self {
            ApproxSpec::Exact => "exact".into(),
            ApproxSpec::Lp { eps, r } => format!("lp(eps={eps},r={r})"),
            ApproxSpec::Ct { taper } => format!("ct(gamma={})", taper.gamma),
            ApproxSpec::Mlp { eps, r, taper } => format!("mlp(eps={eps},r={r},gamma={})", taper.gamma),
        }
    }
}

/// Unit-variance covariance structure at one θ.
#[derive(Debug)]
pub struct CovTemplate {
    theta: Vec<f64>,
    kernel: KernelSpec,
    locs: Arc<Locations>,
    taper: Option<Arc<TaperMatrix>>,
    projector: Option<Arc<Projector>>,
    unit: StructuredCov,
}

impl CovTemplate {
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn form(&self) -> Form {
        self.unit.form()
    }

    pub fn projector(&self) -> Option<&Arc<Projector>> {
        self.projector.as_ref()
    }

    pub fn rank(&self) -> usize {
        self.unit.rank()
    }

    /// Covariance with process variance `sigma2` and nugget `tau2`.
    pub fn instantiate(&self, sigma2: f64, tau2: f64) -> StructuredCov {
        self.unit.rescaled(sigma2, tau2)
    }

    /// Unit-variance cross-covariances between every location (rows) and each
    /// point of `targets` (columns), under the template's approximation.
    pub fn cross_correlation(&self, targets: &Locations) -> Result<Mat<f64>> {
        let n = self.locs.len();
        let k = targets.len();
        let kernel = Kernel::new(&self.kernel)?;
        let rho = Mat::from_fn(n, k, |i, j| kernel.corr(self.locs.point(i), targets.point(j)));
        let dist = |i: usize, j: usize| crate::covariance::euclidean(self.locs.point(i), targets.point(j));
        Ok(match self.form() {
            Form::Exact => rho,
            Form::Ct => {
                let t = self.taper.as_ref().expect("CT template has a taper").spec;
                Mat::from_fn(n, k, |i, j| rho[(i, j)] * t.weight(dist(i, j)))
            }
            Form::Lp | Form::Mlp => {
                let phi = &self.projector.as_ref().expect("projection template has a projector").phi;
                let phi_rho = dense::mul(phi.as_ref(), rho.as_ref());
                let mut approx = Mat::zeros(n, k);
                for j in 0..k {
                    let col: Vec<f64> = (0..phi_rho.nrows()).map(|i| phi_rho[(i, j)]).collect();
                    let c = self.unit.low_rank_cross(&col).expect("projection template has a low-rank part");
                    for i in 0..n {
                        approx[(i, j)] = c[i];
                    }
                }
                let taper = self.taper.as_ref().map(|t| t.spec);
                Mat::from_fn(n, k, |i, j| {
                    let d = dist(i, j);
                    let w = match taper {
                        Some(t) => t.weight(d),
                        None => {
                            if d == 0.0 {
                                1.0
                            } else {
                                0.0
                            }
                        }
                    };
                    approx[(i, j)] + w * (rho[(i, j)] - approx[(i, j)])
                })
            }
        })
    }
}

fn template_bytes(form: Form, n: usize, m: usize, nnz: usize) -> usize {
    8 * match form {
        Form::Exact => n * n,
        Form::Lp => 2 * n * m + n,
        Form::Ct => 2 * nnz,
        Form::Mlp => 2 * n * m + 2 * nnz,
    }
}

struct TemplateCache {
    map: HashMap<Vec<usize>, Arc<CovTemplate>>,
    order: VecDeque<Vec<usize>>,
    capacity: usize,
}

/// Approximation setup shared by the sampler and prediction: locations,
/// taper matrix, one projector per θ atom combination (built up front) and a
/// bounded cache of templates.
pub struct CovarianceModel {
    locs: Arc<Locations>,
    kernel: KernelSpec,
    spec: ApproxSpec,
    atoms: Vec<Vec<f64>>,
    taper: Option<Arc<TaperMatrix>>,
    projectors: HashMap<Vec<usize>, Arc<Projector>>,
    cache: Mutex<TemplateCache>,
    setup_seconds: f64,
}

impl std::fmt::Debug for CovarianceModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CovarianceModel")
            .field("n", &self.locs.len())
            .field("spec", &self.spec)
            .field("atoms", &self.atoms)
            .finish_non_exhaustive()
    }
}

/// Default memory budget for cached templates.
pub const DEFAULT_CACHE_BYTES: usize = 1 << 30;

impl CovarianceModel {
    /// `atoms[k]` lists the admissible values of range parameter `k`; `kernel`
    /// supplies the family, smoothness and region rule (its σ² and ranges are
    /// ignored).
    pub fn new(
        locs: Arc<Locations>,
        kernel: KernelSpec,
        spec: ApproxSpec,
        atoms: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self> {
        Self::with_cache_budget(locs, kernel, spec, atoms, seed, DEFAULT_CACHE_BYTES)
    }

    pub fn with_cache_budget(
        locs: Arc<Locations>,
        kernel: KernelSpec,
        spec: ApproxSpec,
        atoms: Vec<Vec<f64>>,
        seed: u64,
        cache_bytes: usize,
    ) -> Result<Self> {
        let start = Instant::now();
        if atoms.len() != kernel.ranges().len() {
            return Err(Error::config(format!(
                "kernel has {} range parameter(s) but {} atom list(s) were given",
                kernel.ranges().len(),
                atoms.len()
            )));
        }
        if atoms.iter().any(Vec::is_empty) {
            return Err(Error::config("every range parameter needs at least one atom"));
        }
        let taper = match spec.taper() {
            Some(t) => Some(Arc::new(taper_matrix(&locs, &t)?)),
            None => None,
        };
        let mut model = CovarianceModel {
            locs,
            kernel,
            spec,
            atoms,
            taper,
            projectors: HashMap::new(),
            cache: Mutex::new(TemplateCache {
                map: HashMap::new(),
                order: VecDeque::new(),
                capacity: 1,
            }),
            setup_seconds: 0.0,
        };
        let n = model.locs.len();
        let combos = model.all_indices();
        let mut max_rank = 0;
        if let Some((eps, r)) = spec.range_finder() {
            for (flat, idx) in combos.iter().enumerate() {
                let corr = correlation_matrix(&model.locs, &model.kernel_at(idx))?;
                let s = rng_stream(seed, PROJECTOR_STREAM + flat as u64).next_u64();
                let p = adaptive_range_finder(corr.as_ref(), eps, r, s)?;
                max_rank = max_rank.max(p.achieved_rank);
                model.projectors.insert(idx.clone(), Arc::new(p));
            }
        }
        let nnz = model.taper.as_ref().map_or(n, |t| t.pattern().nnz());
        let per = template_bytes(spec.form(), n, max_rank, nnz).max(1);
        model.cache.get_mut().expect("fresh mutex").capacity = (cache_bytes / per).max(2);
        model.setup_seconds = start.elapsed().as_secs_f64();
        Ok(model)
    }

    pub fn locations(&self) -> &Arc<Locations> {
        &self.locs
    }

    pub fn spec(&self) -> &ApproxSpec {
        &self.spec
    }

    pub fn atoms(&self) -> &[Vec<f64>] {
        &self.atoms
    }

    pub fn taper(&self) -> Option<&Arc<TaperMatrix>> {
        self.taper.as_ref()
    }

    /// Seconds spent building the taper matrix and projector table.
    pub fn setup_seconds(&self) -> f64 {
        self.setup_seconds
    }

    pub fn projector(&self, idx: &[usize]) -> Option<&Arc<Projector>> {
        self.projectors.get(idx)
    }

    /// `(θ, achieved rank)` for every projector in the table.
    pub fn ranks(&self) -> Vec<(Vec<f64>, usize)> {
        let mut out: Vec<_> = self
            .projectors
            .iter()
            .map(|(idx, p)| (idx.clone(), self.theta_at(idx), p.achieved_rank))
            .collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out.into_iter().map(|(_, t, m)| (t, m)).collect()
    }

    pub fn theta_at(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().zip(&self.atoms).map(|(&i, a)| a[i]).collect()
    }

    pub fn kernel_at(&self, idx: &[usize]) -> KernelSpec {
        self.kernel.with_sigma2(1.0).with_ranges(&self.theta_at(idx))
    }

    /// Atom indices of `theta`, if every component is an atom.
    pub fn index_of(&self, theta: &[f64]) -> Option<Vec<usize>> {
        theta
            .iter()
            .zip(&self.atoms)
            .map(|(t, a)| a.iter().position(|x| x == t))
            .collect()
    }

    /// Atom index closest to each component of `theta`.
    pub fn nearest_index(&self, theta: &[f64]) -> Vec<usize> {
        theta
            .iter()
            .zip(&self.atoms)
            .map(|(t, a)| {
                let mut best = 0;
                for (i, x) in a.iter().enumerate() {
                    if (x - t).abs() < (a[best] - t).abs() {
                        best = i;
                    }
                }
                best
            })
            .collect()
    }

    fn all_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for a in &self.atoms {
            let mut next = Vec::with_capacity(out.len() * a.len());
            for prefix in &out {
                for i in 0..a.len() {
                    let mut v = prefix.clone();
                    v.push(i);
                    next.push(v);
                }
            }
            out = next;
        }
        out
    }

    /// Template at atom indices `idx`, built on first use.
    pub fn template(&self, idx: &[usize]) -> Result<Arc<CovTemplate>> {
        if let Some(t) = self.cache.lock().expect("cache lock").map.get(idx) {
            return Ok(t.clone());
        }
        let t = Arc::new(self.build_template(idx)?);
        let mut cache = self.cache.lock().expect("cache lock");
        if !cache.map.contains_key(idx) {
            while cache.map.len() >= cache.capacity {
                match cache.order.pop_front() {
                    Some(old) => {
                        cache.map.remove(&old);
                    }
                    None => break,
                }
            }
            cache.order.push_back(idx.to_vec());
            cache.map.insert(idx.to_vec(), t.clone());
        }
        Ok(t)
    }

    fn build_template(&self, idx: &[usize]) -> Result<CovTemplate> {
        if idx.len() != self.atoms.len() || idx.iter().zip(&self.atoms).any(|(&i, a)| i >= a.len()) {
            return Err(Error::usage(format!("atom index {idx:?} out of range")));
        }
        let kernel = self.kernel_at(idx);
        let corr = correlation_matrix(&self.locs, &kernel)?;
        let projector = self.projectors.get(idx).cloned();
        let unit = match self.spec {
            ApproxSpec::Exact => build_exact(corr.as_ref(), 0.0)?,
            ApproxSpec::Lp { .. } => build_lp(corr.as_ref(), projector.as_ref().expect("projector table"), 0.0)?,
            ApproxSpec::Ct { .. } => build_ct(corr.as_ref(), self.taper.as_ref().expect("taper"), 0.0)?,
            ApproxSpec::Mlp { .. } => build_mlp(
                corr.as_ref(),
                projector.as_ref().expect("projector table"),
                self.taper.as_ref().expect("taper"),
                0.0,
            )?,
        };
        Ok(CovTemplate {
            theta: self.theta_at(idx),
            kernel,
            locs: self.locs.clone(),
            taper: self.taper.clone(),
            projector,
            unit,
        })
    }
}
