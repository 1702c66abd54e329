//! Synthetic spatial datasets and train/test partitions.

use faer::Mat;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::covariance::{gram_matrix, KernelSpec, Locations, RegionRule};
use crate::dense;
use crate::model::RegressionData;
use crate::{Error, Result};

/// Largest `n` simulated through a dense Cholesky factor.
pub const SIMULATION_CAP: usize = 10_000;

/// Coordinates, stored covariates (no intercept) and responses.
#[derive(Debug, Clone)]
pub struct SpatialDataset {
    pub locations: Locations,
    pub covariates: Mat<f64>,
    pub y: Vec<f64>,
}

impl SpatialDataset {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Regression design, with a leading column of ones when `intercept`.
    pub fn design(&self, intercept: bool) -> Mat<f64> {
        design_matrix(&self.covariates, intercept)
    }

    pub fn to_regression(&self, intercept: bool) -> Result<RegressionData> {
        RegressionData::new(self.design(intercept), self.y.clone(), self.locations.clone())
    }

    pub fn subset(&self, idx: &[usize]) -> SpatialDataset {
        SpatialDataset {
            locations: self.locations.subset(idx),
            covariates: Mat::from_fn(idx.len(), self.covariates.ncols(), |i, j| {
                self.covariates[(idx[i], j)]
            }),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

pub fn design_matrix(covariates: &Mat<f64>, intercept: bool) -> Mat<f64> {
    let n = covariates.nrows();
    let off = usize::from(intercept);
    Mat::from_fn(n, covariates.ncols() + off, |i, j| {
        if intercept && j == 0 {
            1.0
        } else {
            covariates[(i, j - off)]
        }
    })
}

/// `n` iid uniform points in the box `bounds` (one `(lo, hi)` per axis).
pub fn sample_uniform_locations<R: Rng + ?Sized>(
    n: usize,
    bounds: &[(f64, f64)],
    rng: &mut R,
) -> Result<Locations> {
    if n == 0 {
        return Err(Error::usage("need at least one location"));
    }
    if bounds.is_empty() || bounds.iter().any(|(lo, hi)| !(hi > lo)) {
        return Err(Error::usage("bounds must be nondegenerate intervals"));
    }
    let mut coords = Vec::with_capacity(n * bounds.len());
    for _ in 0..n {
        for &(lo, hi) in bounds {
            coords.push(rng.random_range(lo..hi));
        }
    }
    Locations::from_flat(bounds.len(), coords)
}

/// `Y = Xβ + W + ε` with `W ~ N(0, Σ_W)` and `ε ~ N(0, τ² I)`.
pub fn simulate_gp<R: Rng + ?Sized>(
    locs: &Locations,
    spec: &KernelSpec,
    tau2: f64,
    beta: &[f64],
    x: &Mat<f64>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = locs.len();
    if x.nrows() != n || x.ncols() != beta.len() {
        return Err(Error::usage("X must be n x p with p = len(beta)"));
    }
    if n > SIMULATION_CAP {
        return Err(Error::usage(format!(
            "dense simulation is capped at n = {SIMULATION_CAP}"
        )));
    }
    if !(tau2 >= 0.0) {
        return Err(Error::config("tau2 must be >= 0"));
    }
    let mut y: Vec<f64> = (0..n)
        .map(|i| (0..beta.len()).map(|j| x[(i, j)] * beta[j]).sum())
        .collect();
    if spec.sigma2() > 0.0 {
        let sigma = gram_matrix(locs, spec)?;
        let l = dense::cholesky(sigma.as_ref(), "kernel Gram matrix")?;
        let z = Mat::from_fn(n, 1, |_, _| StandardNormal.sample(rng));
        let w = dense::mul(l.as_ref(), z.as_ref());
        for i in 0..n {
            y[i] += w[(i, 0)];
        }
    }
    if tau2 > 0.0 {
        let sd = tau2.sqrt();
        for v in y.iter_mut() {
            let e: f64 = StandardNormal.sample(rng);
            *v += sd * e;
        }
    }
    Ok(y)
}

/// Random partition of `0..n` into `n_train` training and `n − n_train`
/// test indices, each sorted.
pub fn train_test_split<R: Rng + ?Sized>(
    n: usize,
    n_train: usize,
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if n_train < 1 || n_train >= n {
        return Err(Error::usage(format!(
            "n_train must satisfy 1 <= n_train < n (got {n_train}, n = {n})"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut train = idx[..n_train].to_vec();
    let mut test = idx[n_train..].to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Splits each subregion independently, `train_per_region[k]` training
/// points from region k.
pub fn stratified_split<R: Rng + ?Sized>(
    locs: &Locations,
    rule: &RegionRule,
    train_per_region: [usize; 2],
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut train = Vec::new();
    let mut test = Vec::new();
    for region in 0..2 {
        let members: Vec<usize> = (0..locs.len())
            .filter(|&i| rule.region(locs.point(i)) == region)
            .collect();
        let (tr, te) = train_test_split(members.len(), train_per_region[region], rng)?;
        train.extend(tr.into_iter().map(|i| members[i]));
        test.extend(te.into_iter().map(|i| members[i]));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// A complete synthetic design: locations, regressors and true parameters.
#[derive(Debug, Clone)]
pub struct SimulationDesign {
    pub name: String,
    /// Points per subregion (one entry for a single domain).
    pub counts: Vec<usize>,
    /// One box per subregion.
    pub regions: Vec<Vec<(f64, f64)>>,
    pub train_counts: Vec<usize>,
    pub kernel: KernelSpec,
    pub tau2: f64,
    /// Includes the intercept coefficient when `intercept` is set.
    pub beta: Vec<f64>,
    pub intercept: bool,
    /// Number of stored N(0, 1) covariates.
    pub covariates: usize,
}

impl SimulationDesign {
    /// 2000 points on [0,100]², 1500/500 split, σ² = 0.5, τ² = 1, β = 0 on an
    /// intercept plus one standard-normal covariate; λ = √2/0.06 (strong) or
    /// √2/0.3 (weak).
    pub fn simulation1(strong: bool) -> Self {
        let lambda = if strong {
            2f64.sqrt() / 0.06
        } else {
            2f64.sqrt() / 0.3
        };
        SimulationDesign {
            name: if strong { "sim1-strong" } else { "sim1-weak" }.into(),
            counts: vec![2000],
            regions: vec![vec![(0.0, 100.0), (0.0, 100.0)]],
            train_counts: vec![1500],
            kernel: KernelSpec::exponential(0.5, lambda),
            tau2: 1.0,
            beta: vec![0.0, 0.0],
            intercept: true,
            covariates: 1,
        }
    }

    /// Two subregions of [0,500]² split at x = 250, 1000 points each with a
    /// 750/250 split; nonstationary exponential kernel with λ₁ = 1/0.08,
    /// λ₂ = 1/0.3, σ² = 0.67, τ² = 0.11, β = (1, 2).
    pub fn simulation2() -> Self {
        SimulationDesign {
            name: "sim2".into(),
            counts: vec![1000, 1000],
            regions: vec![
                vec![(0.0, 250.0), (0.0, 500.0)],
                vec![(250.0, 500.0), (0.0, 500.0)],
            ],
            train_counts: vec![750, 750],
            kernel: KernelSpec::NonstationaryPs {
                sigma2: 0.67,
                nu: 0.5,
                lambda1: 1.0 / 0.08,
                lambda2: 1.0 / 0.3,
                region: RegionRule::default(),
            },
            tau2: 0.11,
            beta: vec![1.0, 2.0],
            intercept: true,
            covariates: 1,
        }
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn n_train(&self) -> usize {
        self.train_counts.iter().sum()
    }

    /// Simulated dataset plus `(train, test)` indices.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
    ) -> Result<(SpatialDataset, Vec<usize>, Vec<usize>)> {
        if self.counts.len() != self.regions.len() || self.counts.len() != self.train_counts.len() {
            return Err(Error::config("simulation design: counts, regions and train counts must align"));
        }
        let p = self.covariates + usize::from(self.intercept);
        if p != self.beta.len() {
            return Err(Error::config(format!(
                "simulation design: beta has {} entries, design has {p} columns",
                self.beta.len()
            )));
        }
        let mut coords = Vec::new();
        let mut region_of = Vec::new();
        let mut dim = 2;
        for (k, (&c, b)) in self.counts.iter().zip(&self.regions).enumerate() {
            let l = sample_uniform_locations(c, b, rng)?;
            dim = l.dim();
            for pt in l.iter() {
                coords.extend_from_slice(pt);
                region_of.push(k);
            }
        }
        let locations = Locations::from_flat(dim, coords)?;
        let n = locations.len();
        let covariates = Mat::from_fn(n, self.covariates, |_, _| StandardNormal.sample(&mut *rng));
        let x = design_matrix(&covariates, self.intercept);
        let y = simulate_gp(&locations, &self.kernel, self.tau2, &self.beta, &x, rng)?;
        let mut train = Vec::new();
        let mut test = Vec::new();
        for k in 0..self.counts.len() {
            let members: Vec<usize> = (0..n).filter(|&i| region_of[i] == k).collect();
            let (tr, te) = train_test_split(members.len(), self.train_counts[k], rng)?;
            train.extend(tr.into_iter().map(|i| members[i]));
            test.extend(te.into_iter().map(|i| members[i]));
        }
        train.sort_unstable();
        test.sort_unstable();
        Ok((
            SpatialDataset {
                locations,
                covariates,
                y,
            },
            train,
            test,
        ))
    }
}
