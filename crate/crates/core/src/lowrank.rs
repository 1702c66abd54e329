//! Randomized range finder and the low-rank-plus-sparse covariance forms.

use std::collections::VecDeque;
use std::sync::{Arc, OnceLock};

use faer::{Mat, MatRef};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::covariance::TaperMatrix;
use crate::dense;
use crate::solver::Factors;
use crate::sparse::SymSparse;
use crate::{Error, FactorError, Result};

/// Default cap on `n` for operations that densify an n×n matrix.
pub const DENSIFY_CAP: usize = 5000;

/// An m×n matrix with orthonormal rows plus how it was produced.
#[derive(Debug, Clone)]
pub struct Projector {
    pub phi: Mat<f64>,
    pub target_eps: f64,
    pub prob_param: usize,
    pub seed: u64,
    pub achieved_rank: usize,
    /// The operator was numerically zero and `phi` is the canonical row e₁'.
    pub degenerate: bool,
    /// The stopping rule never fired before m reached n.
    pub reached_full_rank: bool,
}

impl Projector {
    pub fn n(&self) -> usize {
        self.phi.ncols()
    }

    pub fn rank(&self) -> usize {
        self.phi.nrows()
    }

    /// `max |Φ Φ' − I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let g = dense::a_bt(self.phi.as_ref(), self.phi.as_ref());
        let mut worst = 0.0f64;
        for j in 0..g.ncols() {
            for i in 0..g.nrows() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }
}

/// Stopping threshold of the range finder for target error `eps`.
pub fn range_finder_threshold(eps: f64) -> f64 {
    (std::f64::consts::PI / 2.0).sqrt() * eps / 10.0
}

fn project_out(basis: &[Vec<f64>], v: &mut [f64]) {
    for q in basis {
        let h = dot(q, v);
        for (vi, qi) in v.iter_mut().zip(q) {
            *vi -= h * qi;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn apply(sigma: MatRef<'_, f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = sigma.nrows();
    let omega = Mat::from_fn(n, 1, |_, _| StandardNormal.sample(rng));
    let y = dense::mul(sigma, omega.as_ref());
    (0..n).map(|i| y[(i, 0)]).collect()
}

/// Adaptive randomized range finder: orthonormal rows Φ such that
/// `‖Σ − Φ'ΦΣ‖_F < eps` with probability at least `1 − n/10^r`.
pub fn adaptive_range_finder(
    sigma_w: MatRef<'_, f64>,
    eps: f64,
    r: usize,
    seed: u64,
) -> Result<Projector> {
    if !(eps > 0.0) {
        return Err(Error::config(format!("target error eps must be > 0, got {eps}")));
    }
    if r < 1 {
        return Err(Error::config("probability parameter r must be >= 1"));
    }
    let n = sigma_w.nrows();
    if n == 0 || sigma_w.ncols() != n {
        return Err(Error::usage("range finder needs a non-empty square matrix"));
    }
    let threshold = range_finder_threshold(eps);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Steps 1-2: r lookahead samples κ = Σ ω.
    let mut window: VecDeque<Vec<f64>> = (0..r).map(|_| apply(sigma_w, &mut rng)).collect();
    let first = window[0].clone();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut reached_full_rank = false;

    // Step 4.
    while window.iter().map(|k| norm(k)).fold(0.0, f64::max) >= threshold {
        if basis.len() == n {
            reached_full_rank = true;
            break;
        }
        // Steps 5-6.
        let mut kappa = window.pop_front().expect("window holds r vectors");
        project_out(&basis, &mut kappa);
        let len = norm(&kappa);
        if len > 0.0 {
            kappa.iter_mut().for_each(|v| *v /= len);
            basis.push(kappa);
        }
        // Steps 7-8.
        let mut fresh = apply(sigma_w, &mut rng);
        project_out(&basis, &mut fresh);
        // Step 9: downdate the remaining lookahead vectors.
        if len > 0.0 {
            let q = basis.last().expect("just pushed");
            for k in window.iter_mut() {
                let h = dot(q, k);
                for (ki, qi) in k.iter_mut().zip(q) {
                    *ki -= h * qi;
                }
            }
        }
        window.push_back(fresh);
    }
    // Roundoff can let the rule fire on the last step; m = n is still full rank.
    let reached_full_rank = reached_full_rank || basis.len() == n;
    if reached_full_rank {
        log::warn!("range finder reached full rank m = n = {n} before the stopping rule fired");
    }

    // Step 11.
    let mut degenerate = false;
    if basis.is_empty() {
        let len = norm(&first);
        if len > 0.0 {
            basis.push(first.iter().map(|v| v / len).collect());
        } else {
            degenerate = true;
            let mut e1 = vec![0.0; n];
            e1[0] = 1.0;
            basis.push(e1);
        }
    }
    let m = basis.len();
    let phi = Mat::from_fn(m, n, |i, j| basis[i][j]);
    Ok(Projector {
        phi,
        target_eps: eps,
        prob_param: r,
        seed,
        achieved_rank: m,
        degenerate,
        reached_full_rank,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    Exact,
    Lp,
    Ct,
    Mlp,
}

impl Form {
    pub fn name(self) -> &'static str {
        match self {
            Form::Exact => "exact",
            Form::Lp => "lp",
            Form::Ct => "ct",
            Form::Mlp => "mlp",
        }
    }
}

/// `U M⁻¹ U'` with `U = Σ Φ'`, `M = Φ Σ Φ'`.
#[derive(Debug)]
pub(crate) struct LowRank {
    pub(crate) u: Mat<f64>,
    pub(crate) m: Mat<f64>,
    pub(crate) m_chol: Mat<f64>,
    // Column i is L_M⁻¹ u_i, so Σ_approx(i, j) = g_i · g_j.
    pub(crate) g: Mat<f64>,
}

impl LowRank {
    fn new(sigma_w: MatRef<'_, f64>, phi: MatRef<'_, f64>) -> Result<Self> {
        let u = dense::a_bt(sigma_w, phi);
        let raw = dense::mul(phi, u.as_ref());
        let k = raw.nrows();
        let m = Mat::from_fn(k, k, |i, j| 0.5 * (raw[(i, j)] + raw[(j, i)]));
        let m_chol = dense::cholesky(m.as_ref(), "projected covariance M = Φ Σ Φ'")?;
        let mut g = u.transpose().to_owned();
        dense::solve_lower_in_place(m_chol.as_ref(), g.as_mut());
        Ok(LowRank { u, m, m_chol, g })
    }

    pub(crate) fn rank(&self) -> usize {
        self.m.nrows()
    }

    pub(crate) fn entry(&self, i: usize, j: usize) -> f64 {
        let k = self.g.nrows();
        let gi = self.g.col(i);
        let gj = self.g.col(j);
        let mut s = 0.0;
        for t in 0..k {
            s += gi[t] * gj[t];
        }
        s
    }
}

#[derive(Debug)]
pub(crate) enum Core {
    Dense(Mat<f64>),
    Sparse(SymSparse),
}

#[derive(Debug)]
pub(crate) struct Parts {
    pub(crate) form: Form,
    pub(crate) low_rank: Option<LowRank>,
    pub(crate) core: Core,
    pub(crate) clamped: usize,
}

/// Covariance operator `scale·(U M⁻¹ U' + S) + τ² I`.
///
/// Factorizations are computed on first use and cached in the handle;
/// concurrent first use factors once.
#[derive(Debug, Clone)]
pub struct StructuredCov {
    pub(crate) parts: Arc<Parts>,
    pub(crate) scale: f64,
    pub(crate) nugget: f64,
    pub(crate) factors: OnceLock<std::result::Result<Arc<Factors>, FactorError>>,
}

impl StructuredCov {
    fn from_parts(parts: Parts, nugget: f64) -> Self {
        StructuredCov {
            parts: Arc::new(parts),
            scale: 1.0,
            nugget,
            factors: OnceLock::new(),
        }
    }

    /// `τ² I` alone.
    pub fn nugget_only(n: usize, tau2: f64) -> Self {
        Self::from_parts(
            Parts {
                form: Form::Ct,
                low_rank: None,
                core: Core::Sparse(SymSparse::from_diagonal(&vec![0.0; n])),
                clamped: 0,
            },
            tau2,
        )
    }

    pub fn n(&self) -> usize {
        match &self.parts.core {
            Core::Dense(m) => m.nrows(),
            Core::Sparse(s) => s.n(),
        }
    }

    pub fn form(&self) -> Form {
        self.parts.form
    }

    pub fn nugget(&self) -> f64 {
        self.nugget
    }

    /// Multiplier applied to the low-rank and sparse parts.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rank(&self) -> usize {
        self.parts.low_rank.as_ref().map_or(0, LowRank::rank)
    }

    /// Diagonal residuals that came out negative and were set to zero.
    pub fn clamped_count(&self) -> usize {
        self.parts.clamped
    }

    /// Same structure with the low-rank and sparse parts multiplied by
    /// `factor` and nugget `tau2`. Reuses the stored parts; factors are
    /// recomputed lazily.
    pub fn rescaled(&self, factor: f64, tau2: f64) -> Self {
        StructuredCov {
            parts: self.parts.clone(),
            scale: self.scale * factor,
            nugget: tau2,
            factors: OnceLock::new(),
        }
    }

    pub fn with_nugget(&self, tau2: f64) -> Self {
        self.rescaled(1.0, tau2)
    }

    /// Sparse part, if stored sparsely (LP, CT, MLP).
    pub fn sparse_part(&self) -> Option<SymSparse> {
        match &self.parts.core {
            Core::Sparse(s) => Some(s.map(|_, _, v| self.scale * v)),
            Core::Dense(_) => None,
        }
    }

    /// `M = Φ Σ Φ'` at the current scale.
    pub fn projected_m(&self) -> Option<Mat<f64>> {
        self.parts
            .low_rank
            .as_ref()
            .map(|lr| Mat::from_fn(lr.rank(), lr.rank(), |i, j| self.scale * lr.m[(i, j)]))
    }

    /// `U = Σ Φ'` at the current scale.
    pub fn u_factor(&self) -> Option<Mat<f64>> {
        self.parts.low_rank.as_ref().map(|lr| {
            Mat::from_fn(lr.u.nrows(), lr.u.ncols(), |i, j| self.scale * lr.u[(i, j)])
        })
    }

    /// The low-rank part alone (`Σ_approx`), as an LP-shaped operator with a
    /// zero diagonal.
    pub fn low_rank_only(&self) -> Option<Self> {
        self.parts.low_rank.as_ref()?;
        let parts = &self.parts;
        let lr = parts.low_rank.as_ref().expect("checked above");
        Some(StructuredCov {
            parts: Arc::new(Parts {
                form: Form::Lp,
                low_rank: Some(LowRank {
                    u: lr.u.clone(),
                    m: lr.m.clone(),
                    m_chol: lr.m_chol.clone(),
                    g: lr.g.clone(),
                }),
                core: Core::Sparse(SymSparse::from_diagonal(&vec![0.0; self.n()])),
                clamped: 0,
            }),
            scale: self.scale,
            nugget: self.nugget,
            factors: OnceLock::new(),
        })
    }

    /// Dense n×n matrix without the nugget.
    pub fn densify(&self) -> Result<Mat<f64>> {
        self.densify_capped(DENSIFY_CAP)
    }

    pub fn densify_capped(&self, cap: usize) -> Result<Mat<f64>> {
        let n = self.n();
        if n > cap {
            return Err(Error::usage(format!(
                "refusing to densify an {n}x{n} matrix (cap {cap})"
            )));
        }
        let mut out = match &self.parts.core {
            Core::Dense(m) => m.clone(),
            Core::Sparse(s) => s.to_dense(),
        };
        if let Some(lr) = &self.parts.low_rank {
            let approx = dense::at_b(lr.g.as_ref(), lr.g.as_ref());
            out += approx;
        }
        Ok(Mat::from_fn(n, n, |i, j| self.scale * out[(i, j)]))
    }

    /// Dense n×n matrix including `τ² I`.
    pub fn densify_with_nugget(&self) -> Result<Mat<f64>> {
        let mut d = self.densify()?;
        for i in 0..d.nrows() {
            d[(i, i)] += self.nugget;
        }
        Ok(d)
    }

    /// `Σ_approx(s0, s_i)` for each location, given `Φ c(s0)`.
    pub(crate) fn low_rank_cross(&self, phi_c0: &[f64]) -> Option<Vec<f64>> {
        let lr = self.parts.low_rank.as_ref()?;
        let mut a = dense::column_vector(phi_c0);
        dense::solve_lower_in_place(lr.m_chol.as_ref(), a.as_mut());
        let out = dense::at_b(lr.g.as_ref(), a.as_ref());
        Some((0..out.nrows()).map(|i| out[(i, 0)]).collect())
    }
}

fn check_square(sigma_w: MatRef<'_, f64>) -> Result<usize> {
    let n = sigma_w.nrows();
    if sigma_w.ncols() != n {
        return Err(Error::usage("covariance matrix must be square"));
    }
    Ok(n)
}

fn check_phi(sigma_w: MatRef<'_, f64>, phi: &Projector) -> Result<usize> {
    let n = check_square(sigma_w)?;
    if phi.n() != n {
        return Err(Error::usage(format!(
            "projector has {} columns, covariance has {n} rows",
            phi.n()
        )));
    }
    Ok(n)
}

fn check_taper(n: usize, taper: &TaperMatrix) -> Result<()> {
    if taper.matrix.n() != n {
        return Err(Error::usage(format!(
            "taper matrix is {}x{0}, covariance is {n}x{n}",
            taper.matrix.n()
        )));
    }
    Ok(())
}

/// The exact covariance `Σ_W + τ² I`, stored densely.
pub fn build_exact(sigma_w: MatRef<'_, f64>, tau2: f64) -> Result<StructuredCov> {
    check_square(sigma_w)?;
    Ok(StructuredCov::from_parts(
        Parts {
            form: Form::Exact,
            low_rank: None,
            core: Core::Dense(sigma_w.to_owned()),
            clamped: 0,
        },
        tau2,
    ))
}

/// Linear projection: `Σ_approx + Σ_diag + τ² I`.
pub fn build_lp(sigma_w: MatRef<'_, f64>, phi: &Projector, tau2: f64) -> Result<StructuredCov> {
    let n = check_phi(sigma_w, phi)?;
    let lr = LowRank::new(sigma_w, phi.phi.as_ref())?;
    let mut clamped = 0;
    let diag: Vec<f64> = (0..n)
        .map(|i| clamp_diag(sigma_w[(i, i)] - lr.entry(i, i), &mut clamped))
        .collect();
    warn_clamped(clamped);
    Ok(StructuredCov::from_parts(
        Parts {
            form: Form::Lp,
            low_rank: Some(lr),
            core: Core::Sparse(SymSparse::from_diagonal(&diag)),
            clamped,
        },
        tau2,
    ))
}

/// Covariance tapering: `Σ_W ∘ Σ_taper + τ² I`.
pub fn build_ct(sigma_w: MatRef<'_, f64>, taper: &TaperMatrix, tau2: f64) -> Result<StructuredCov> {
    let n = check_square(sigma_w)?;
    check_taper(n, taper)?;
    let core = taper.matrix.map(|i, j, w| sigma_w[(i, j)] * w);
    Ok(StructuredCov::from_parts(
        Parts {
            form: Form::Ct,
            low_rank: None,
            core: Core::Sparse(core),
            clamped: 0,
        },
        tau2,
    ))
}

/// Modified linear projection: `Σ_approx + (Σ_W − Σ_approx) ∘ Σ_taper + τ² I`.
pub fn build_mlp(
    sigma_w: MatRef<'_, f64>,
    phi: &Projector,
    taper: &TaperMatrix,
    tau2: f64,
) -> Result<StructuredCov> {
    let n = check_phi(sigma_w, phi)?;
    check_taper(n, taper)?;
    let lr = LowRank::new(sigma_w, phi.phi.as_ref())?;
    let mut clamped = 0;
    let core = taper.matrix.map(|i, j, w| {
        let resid = sigma_w[(i, j)] - lr.entry(i, j);
        if i == j {
            clamp_diag(resid, &mut clamped) * w
        } else {
            resid * w
        }
    });
    warn_clamped(clamped);
    Ok(StructuredCov::from_parts(
        Parts {
            form: Form::Mlp,
            low_rank: Some(lr),
            core: Core::Sparse(core),
            clamped,
        },
        tau2,
    ))
}

fn clamp_diag(v: f64, clamped: &mut usize) -> f64 {
    if v < 0.0 {
        *clamped += 1;
        0.0
    } else {
        v
    }
}

fn warn_clamped(count: usize) {
    if count > 0 {
        log::warn!("{count} negative diagonal residual(s) clamped to zero");
    }
}

/// `‖Σ_W − approx‖_F` with the nugget excluded.
pub fn frobenius_error(sigma_w: MatRef<'_, f64>, approx: &StructuredCov) -> Result<f64> {
    frobenius_error_capped(sigma_w, approx, DENSIFY_CAP)
}

pub fn frobenius_error_capped(
    sigma_w: MatRef<'_, f64>,
    approx: &StructuredCov,
    cap: usize,
) -> Result<f64> {
    let d = approx.densify_capped(cap)?;
    if d.nrows() != sigma_w.nrows() || sigma_w.ncols() != sigma_w.nrows() {
        return Err(Error::usage("dimension mismatch in frobenius_error"));
    }
    Ok(dense::frobenius_diff(sigma_w, d.as_ref()))
}

/// Upper bound `(n/2){ε/τ² − log(1 − ε/τ²)}` on the KL divergence.
pub fn kl_bound(n: usize, eps: f64, tau2: f64) -> Result<f64> {
    if !(tau2 > 0.0) || !(eps >= 0.0) {
        return Err(Error::usage(format!(
            "kl_bound needs eps >= 0 and tau2 > 0 (got eps = {eps}, tau2 = {tau2})"
        )));
    }
    if eps >= tau2 {
        return Err(Error::Numerical(format!(
            "kl_bound out of regime: eps = {eps} >= tau2 = {tau2}"
        )));
    }
    let t = eps / tau2;
    Ok(0.5 * n as f64 * (t - (1.0 - t).ln()))
}

/// `KL(N(μ, Σ_f) ‖ N(μ*, Σ_f*))`.
pub fn kl_gaussian(
    mean_f: &[f64],
    cov_f: MatRef<'_, f64>,
    mean_fstar: &[f64],
    cov_fstar: MatRef<'_, f64>,
) -> Result<f64> {
    let n = cov_f.nrows();
    if cov_fstar.nrows() != n || mean_f.len() != n || mean_fstar.len() != n {
        return Err(Error::usage("dimension mismatch in kl_gaussian"));
    }
    let lf = dense::cholesky(cov_f, "KL covariance f")?;
    let ls = dense::cholesky(cov_fstar, "KL covariance f*")?;
    // tr(Σ*⁻¹ Σ) = ‖L*⁻¹ L‖_F².
    let mut x = lf.clone();
    dense::solve_lower_in_place(ls.as_ref(), x.as_mut());
    let mut trace = 0.0;
    for j in 0..n {
        for i in 0..n {
            trace += x[(i, j)] * x[(i, j)];
        }
    }
    let mut d = Mat::from_fn(n, 1, |i, _| mean_fstar[i] - mean_f[i]);
    dense::solve_lower_in_place(ls.as_ref(), d.as_mut());
    let maha: f64 = (0..n).map(|i| d[(i, 0)] * d[(i, 0)]).sum();
    let logdet_ratio =
        dense::log_det_from_factor(ls.as_ref()) - dense::log_det_from_factor(lf.as_ref());
    Ok(0.5 * (trace - n as f64 + maha + logdet_ratio))
}
