//! Correlation kernels, compactly supported tapers and Gram-matrix builders.

use std::collections::HashMap;
use std::sync::Arc;

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sparse::{Pattern, SymSparse};
use crate::{Error, Result};

/// Smoothness values with closed-form Matérn correlations.
pub const SUPPORTED_NU: [f64; 3] = [0.5, 1.5, 2.5];

/// Sampling locations, stored row-major as `n` points of dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Locations {
    dim: usize,
    coords: Vec<f64>,
}

impl Locations {
    pub fn new(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points.first().map_or(2, Vec::len);
        let mut coords = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::usage(format!(
                    "location {i} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            coords.extend_from_slice(p);
        }
        Self::from_flat(dim, coords)
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::usage("coordinate buffer does not match dimension"));
        }
        if coords.iter().any(|c| c.is_nan()) {
            return Err(Error::usage("NaN coordinate"));
        }
        Ok(Locations { dim, coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(self.point(i), self.point(j))
    }

    pub fn subset(&self, idx: &[usize]) -> Locations {
        let mut coords = Vec::with_capacity(idx.len() * self.dim);
        for &i in idx {
            coords.extend_from_slice(self.point(i));
        }
        Locations {
            dim: self.dim,
            coords,
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Subregion rule for the nonstationary kernel: a point is in region 1 iff
/// `coord[axis] <= threshold`, otherwise region 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionRule {
    pub axis: usize,
    pub threshold: f64,
}

impl Default for RegionRule {
    fn default() -> Self {
        RegionRule {
            axis: 0,
            threshold: 250.0,
        }
    }
}

impl RegionRule {
    /// 0 for the first subregion, 1 for the second.
    pub fn region(&self, s: &[f64]) -> usize {
        usize::from(s[self.axis] > self.threshold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Matern {
        sigma2: f64,
        nu: f64,
        lambda: f64,
    },
    /// Paciorek–Schervish kernel with isotropic kernel matrices `λ²_{D(s)} I`.
    NonstationaryPs {
        sigma2: f64,
        nu: f64,
        lambda1: f64,
        lambda2: f64,
        region: RegionRule,
    },
}

impl KernelSpec {
    pub fn exponential(sigma2: f64, lambda: f64) -> Self {
        KernelSpec::Matern {
            sigma2,
            nu: 0.5,
            lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (sigma2, nu, ranges): (f64, f64, Vec<f64>) = match *self {
            KernelSpec::Matern { sigma2, nu, lambda } => (sigma2, nu, vec![lambda]),
            KernelSpec::NonstationaryPs {
                sigma2,
                nu,
                lambda1,
                lambda2,
                ..
            } => (sigma2, nu, vec![lambda1, lambda2]),
        };
        Smoothness::from_nu(nu)?;
        if !(sigma2 >= 0.0) || !sigma2.is_finite() {
            return Err(Error::config(format!("sigma2 must be >= 0, got {sigma2}")));
        }
        for l in ranges {
            if !(l > 0.0) || !l.is_finite() {
                return Err(Error::config(format!("range parameters must be > 0, got {l}")));
            }
        }
        Ok(())
    }

    pub fn sigma2(&self) -> f64 {
        match *self {
            KernelSpec::Matern { sigma2, .. } | KernelSpec::NonstationaryPs { sigma2, .. } => {
                sigma2
            }
        }
    }

    pub fn with_sigma2(mut self, value: f64) -> Self {
        match &mut self {
            KernelSpec::Matern { sigma2, .. } | KernelSpec::NonstationaryPs { sigma2, .. } => {
                *sigma2 = value
            }
        }
        self
    }

    /// Range parameters in order: `[λ]` or `[λ₁, λ₂]`.
    pub fn ranges(&self) -> Vec<f64> {
        match *self {
            KernelSpec::Matern { lambda, .. } => vec![lambda],
            KernelSpec::NonstationaryPs {
                lambda1, lambda2, ..
            } => vec![lambda1, lambda2],
        }
    }

    /// Replaces the range parameters, in the order of [`KernelSpec::ranges`].
    pub fn with_ranges(mut self, values: &[f64]) -> Self {
        match &mut self {
            KernelSpec::Matern { lambda, .. } => *lambda = values[0],
            KernelSpec::NonstationaryPs {
                lambda1, lambda2, ..
            } => {
                *lambda1 = values[0];
                *lambda2 = values[1];
            }
        }
        self
    }

    /// Covariance between two points.
    pub fn covariance(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        let k = Kernel::new(self)?;
        Ok(self.sigma2() * k.corr(a, b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Smoothness {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl Smoothness {
    fn from_nu(nu: f64) -> Result<Self> {
        if nu == 0.5 {
            Ok(Smoothness::Half)
        } else if nu == 1.5 {
            Ok(Smoothness::ThreeHalves)
        } else if nu == 2.5 {
            Ok(Smoothness::FiveHalves)
        } else {
            Err(Error::config(format!(
                "unsupported Matérn smoothness nu = {nu}; supported values are 0.5, 1.5, 2.5"
            )))
        }
    }

    fn nu(self) -> f64 {
        match self {
            Smoothness::Half => 0.5,
            Smoothness::ThreeHalves => 1.5,
            Smoothness::FiveHalves => 2.5,
        }
    }

    // Matérn correlation as a function of x = 2√ν·h/λ.
    fn shape(self, x: f64) -> f64 {
        match self {
            Smoothness::Half => (-x).exp(),
            Smoothness::ThreeHalves => (1.0 + x) * (-x).exp(),
            Smoothness::FiveHalves => (1.0 + x + x * x / 3.0) * (-x).exp(),
        }
    }
}

/// Matérn correlation at distance `h`.
pub fn matern_corr(h: f64, nu: f64, lambda: f64) -> Result<f64> {
    let s = Smoothness::from_nu(nu)?;
    if !(lambda > 0.0) {
        return Err(Error::config(format!("range lambda must be > 0, got {lambda}")));
    }
    if !(h >= 0.0) {
        return Err(Error::usage(format!("distance must be >= 0, got {h}")));
    }
    Ok(s.shape(2.0 * s.nu().sqrt() * h / lambda))
}

/// Nonstationary covariance between `s` and `t`.
pub fn nonstationary_cov(s: &[f64], t: &[f64], spec: &KernelSpec) -> Result<f64> {
    match spec {
        KernelSpec::NonstationaryPs { .. } => spec.covariance(s, t),
        KernelSpec::Matern { .. } => Err(Error::config(
            "nonstationary_cov requires a NonstationaryPs kernel",
        )),
    }
}

/// Validated kernel ready for repeated correlation evaluations.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Kernel {
    smooth: Smoothness,
    ranges: [f64; 2],
    region: Option<RegionRule>,
}

impl Kernel {
    pub(crate) fn new(spec: &KernelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match *spec {
            KernelSpec::Matern { nu, lambda, .. } => Kernel {
                smooth: Smoothness::from_nu(nu)?,
                ranges: [lambda, lambda],
                region: None,
            },
            KernelSpec::NonstationaryPs {
                nu,
                lambda1,
                lambda2,
                region,
                ..
            } => Kernel {
                smooth: Smoothness::from_nu(nu)?,
                ranges: [lambda1, lambda2],
                region: Some(region),
            },
        })
    }

    fn range_at(&self, s: &[f64]) -> f64 {
        match self.region {
            None => self.ranges[0],
            Some(rule) => self.ranges[rule.region(s)],
        }
    }

    pub(crate) fn corr(&self, a: &[f64], b: &[f64]) -> f64 {
        let h = euclidean(a, b);
        match self.region {
            None => self.corr_h(h, self.ranges[0], self.ranges[0], a.len()),
            Some(_) => self.corr_h(h, self.range_at(a), self.range_at(b), a.len()),
        }
    }

    fn corr_h(&self, h: f64, la: f64, lb: f64, dim: usize) -> f64 {
        let nu = self.smooth.nu();
        if la == lb {
            return self.smooth.shape(2.0 * nu.sqrt() * h / la);
        }
        let pooled = 0.5 * (la * la + lb * lb);
        let prefactor = (la * lb / pooled).powf(0.5 * dim as f64);
        prefactor * self.smooth.shape(2.0 * (nu * h * h / pooled).sqrt())
    }
}

/// Dense covariance matrix `σ² ρ(s_i, s_j)`.
pub fn gram_matrix(locs: &Locations, spec: &KernelSpec) -> Result<Mat<f64>> {
    let kernel = Kernel::new(spec)?;
    Ok(build_symmetric(locs, spec.sigma2(), &kernel))
}

/// Dense correlation matrix (unit variance).
pub fn correlation_matrix(locs: &Locations, spec: &KernelSpec) -> Result<Mat<f64>> {
    let kernel = Kernel::new(spec)?;
    Ok(build_symmetric(locs, 1.0, &kernel))
}

fn build_symmetric(locs: &Locations, scale: f64, kernel: &Kernel) -> Mat<f64> {
    let n = locs.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let pj = locs.point(j);
            (j..n).map(|i| scale * kernel.corr(locs.point(i), pj)).collect()
        })
        .collect();
    let mut m = Mat::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        for (k, &v) in col.iter().enumerate() {
            m[(j + k, j)] = v;
            m[(j, j + k)] = v;
        }
    }
    m
}

/// Covariances between `s0` and every location.
pub fn cross_covariance(s0: &[f64], locs: &Locations, spec: &KernelSpec) -> Result<Vec<f64>> {
    let kernel = Kernel::new(spec)?;
    let s2 = spec.sigma2();
    Ok(locs.iter().map(|p| s2 * kernel.corr(s0, p)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaperKind {
    Spherical,
    Wendland2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaperSpec {
    pub kind: TaperKind,
    pub gamma: f64,
}

impl TaperSpec {
    pub fn new(kind: TaperKind, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(TaperSpec { kind, gamma })
    }

    pub fn wendland2(gamma: f64) -> Result<Self> {
        Self::new(TaperKind::Wendland2, gamma)
    }

    pub fn weight(&self, x: f64) -> f64 {
        match self.kind {
            TaperKind::Spherical => spherical(x, self.gamma),
            TaperKind::Wendland2 => wendland2(x, self.gamma),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("taper range gamma must be > 0, got {gamma}")))
    }
}

fn spherical(x: f64, gamma: f64) -> f64 {
    if x >= gamma {
        return 0.0;
    }
    let t = 1.0 - x / gamma;
    t * t * (1.0 + x / (2.0 * gamma))
}

fn wendland2(x: f64, gamma: f64) -> f64 {
    if x >= gamma {
        return 0.0;
    }
    let r = x / gamma;
    let t = 1.0 - r;
    let t3 = t * t * t;
    t3 * t3 * (1.0 + 6.0 * r + 35.0 * r * r / 3.0)
}

pub fn spherical_taper(x: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(spherical(x, gamma))
}

pub fn wendland2_taper(x: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(wendland2(x, gamma))
}

/// Sparse taper matrix `K_γ(‖s_i − s_j‖)` over pairs closer than γ.
#[derive(Debug, Clone)]
pub struct TaperMatrix {
    pub spec: TaperSpec,
    pub matrix: SymSparse,
}

impl TaperMatrix {
    /// Percentage of nonzero off-diagonal entries.
    pub fn sparsity_pct(&self) -> f64 {
        let n = self.matrix.n();
        if n < 2 {
            return 0.0;
        }
        let off = 2.0 * self.matrix.pattern().nnz_off_diagonal() as f64;
        100.0 * off / (n as f64 * (n as f64 - 1.0))
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        self.matrix.pattern()
    }
}

pub fn taper_matrix(locs: &Locations, taper: &TaperSpec) -> Result<TaperMatrix> {
    check_gamma(taper.gamma)?;
    let n = locs.len();
    let d = locs.dim();
    let gamma = taper.gamma;

    let cell_of = |p: &[f64]| -> Vec<i64> { p.iter().map(|c| (c / gamma).floor() as i64).collect() };
    let mut grid: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    for (i, p) in locs.iter().enumerate() {
        grid.entry(cell_of(p)).or_default().push(i);
    }
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(d as u32))
        .map(|mut code| {
            (0..d)
                .map(|_| {
                    let o = (code % 3) as i64 - 1;
                    code /= 3;
                    o
                })
                .collect()
        })
        .collect();

    let cols: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let pj = locs.point(j);
            let base = cell_of(pj);
            let mut out = Vec::new();
            let mut key = vec![0i64; d];
            for off in &offsets {
                for k in 0..d {
                    key[k] = base[k] + off[k];
                }
                if let Some(members) = grid.get(&key) {
                    for &i in members {
                        if i > j {
                            let h = euclidean(locs.point(i), pj);
                            if h < gamma {
                                out.push((i, taper.weight(h)));
                            }
                        }
                    }
                }
            }
            out.sort_unstable_by_key(|e| e.0);
            out
        })
        .collect();

    let pattern = Arc::new(Pattern::from_lower_columns(
        n,
        cols.iter().map(|c| c.iter().map(|e| e.0).collect()).collect(),
    ));
    let mut values = Vec::with_capacity(pattern.nnz());
    for c in &cols {
        values.push(1.0);
        values.extend(c.iter().map(|e| e.1));
    }
    Ok(TaperMatrix {
        spec: *taper,
        matrix: SymSparse::new(pattern, values),
    })
}
