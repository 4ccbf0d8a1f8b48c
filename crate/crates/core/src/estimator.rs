//! Ordinary and weighted least squares, weight assignment rules, covariance
//! analysis and the iteratively reweighted loop.
//!
//! All solvers work on the row-weighted system `W B` through a column
//! equilibrated SVD; the normal equations are never formed. The covariance
//! of an estimate obtained with weights `W` under true dispersions `Σ` is the
//! sandwich
//!
//! ```text
//! (Bᵀ W² B)⁻¹ (Bᵀ W² Σ² W² B) (Bᵀ W² B)⁻¹ = G diag(w² σ²) Gᵀ,   G = (W B)⁺
//! ```
//!
//! which reduces to `(Bᵀ Σ⁻² B)⁻¹` when `W Σ = I` and to `σ² (Bᵀ B)⁻¹` when
//! `W = I` and `Σ = σ I`.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::noise::{build_sigma, dispersions_by_config};
use crate::regressor::StackedSystem;

/// Relative singular-value cutoff below which a direction is unidentifiable.
pub const RANK_CUTOFF: f64 = 1e-10;
/// Relative singular value below which a weak direction is reported.
pub const WEAK_DIRECTION_WARNING: f64 = 1e-8;

/// Claimed instrument precision used as default `σ₀`, meters.
pub const DEFAULT_SIGMA0: f64 = 10e-6;
pub const DEFAULT_LAMBDA: f64 = 1.0;
pub const DEFAULT_REL_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_ITER: usize = 20;

/// Diagonal of the weighting matrix `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix(DVector<f64>);

impl WeightMatrix {
    pub fn new(w: DVector<f64>) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidWeights("weights must be finite and non-negative".into()));
        }
        if w.iter().all(|v| *v == 0.0) {
            return Err(Error::InvalidWeights("all weights are zero".into()));
        }
        Ok(Self(w))
    }

    pub fn identity(n: usize) -> Self {
        Self(DVector::from_element(n, 1.0))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(&self.0 * c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Ols,
    Wls,
    Irls,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Ols => "OLS",
            Method::Wls => "WLS",
            Method::Irls => "IRLS",
        }
    }
}

/// One pass of the reweighting loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Iteration {
    pub x_hat: DVector<f64>,
    pub ci3: DVector<f64>,
    /// Max per-parameter relative change from the previous iterate (the OLS
    /// starting point for the first pass).
    pub max_rel_change: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub method: Method,
    pub param_names: Vec<String>,
    pub x_hat: DVector<f64>,
    pub covariance: DMatrix<f64>,
    /// `3 sqrt(cov_ii)`.
    pub ci3: DVector<f64>,
    /// `B x̂ - dp`.
    pub residuals: DVector<f64>,
    /// Weights used for the final solve (`None` for OLS).
    pub weights: Option<DVector<f64>>,
    pub iterations: Vec<Iteration>,
    pub converged: bool,
    /// Set when the reweighting loop stopped because a weighted information
    /// matrix lost rank; the result is the last valid iterate.
    pub rank_loss: bool,
}

impl EstimationResult {
    pub fn n_params(&self) -> usize {
        self.x_hat.len()
    }
}

struct Solution {
    x: DVector<f64>,
    /// Weights rescaled to unit maximum.
    w: DVector<f64>,
    /// The factor removed from the weights.
    w_max: f64,
    /// Pseudo-inverse of the weighted regressor `diag(w) B`, n × rows.
    pinv: DMatrix<f64>,
}

/// Solves `min ‖diag(w) (B x - dp)‖` by SVD of the column-equilibrated
/// weighted regressor.
fn solve_weighted(
    b: &DMatrix<f64>,
    dp: &DVector<f64>,
    w: &DVector<f64>,
    names: &[String],
) -> Result<Solution> {
    let (rows, n) = b.shape();
    if rows < n {
        return Err(Error::Underdetermined { rows, params: n });
    }
    // estimates and covariances do not depend on the overall weight scale
    let w_max = w.amax();
    if !(w_max > 0.0) || !w_max.is_finite() {
        return Err(Error::InvalidWeights("weights must be finite with a positive entry".into()));
    }
    let w = w / w_max;
    let wb = DMatrix::from_fn(rows, n, |r, c| w[r] * b[(r, c)]);
    let mut a = wb.clone();
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    let mut scale = DVector::zeros(n);
    for c in 0..n {
        // columns at round-off level stay unscaled so they register as null directions
        scale[c] = if norms[c] > 1e-12 * max_norm { 1.0 / norms[c] } else { 1.0 };
        a.column_mut(c).scale_mut(scale[c]);
    }
    let svd = SVD::new(a, true, true);
    let s = &svd.singular_values;
    let s_max = s.max();
    let v_t = svd.v_t.as_ref().expect("SVD computed with V");
    let u = svd.u.as_ref().expect("SVD computed with U");

    let describe = |k: usize| -> String {
        let dir = v_t.row(k).transpose().component_mul(&scale);
        let dir = &dir / dir.amax();
        let terms: Vec<String> = dir
            .iter()
            .zip(names)
            .filter(|(c, _)| c.abs() > 0.05)
            .map(|(c, name)| format!("{c:+.3}*{name}"))
            .collect();
        format!("[{}]", terms.join(" "))
    };

    let weak: Vec<usize> = (0..s.len())
        .filter(|&k| !(s[k] > RANK_CUTOFF * s_max))
        .collect();
    if !weak.is_empty() || !(s_max > 0.0) {
        let directions = weak.iter().map(|&k| describe(k)).collect::<Vec<_>>().join(", ");
        return Err(Error::RankDeficient {
            rank: n - weak.len(),
            params: n,
            directions,
        });
    }
    let k_min = s.imin();
    if s[k_min] < WEAK_DIRECTION_WARNING * s_max {
        log::warn!(
            "information matrix is nearly singular (relative singular value {:.3e}); weakest direction {}",
            s[k_min] / s_max,
            describe(k_min)
        );
    }

    // pinv(A_scaled) = V S⁻¹ Uᵀ; pinv(W B) = D pinv(A_scaled)
    let mut vs = v_t.transpose();
    for k in 0..n {
        vs.column_mut(k).scale_mut(1.0 / s[k]);
    }
    let mut pinv = vs * u.transpose();
    for c in 0..n {
        pinv.row_mut(c).scale_mut(scale[c]);
    }
    let wdp = dp.component_mul(&w);
    let mut x = &pinv * &wdp;
    // one refinement step removes most of the round-off left by the SVD
    let r = &wdp - &wb * &x;
    x += &pinv * r;
    Ok(Solution { x, w, w_max, pinv })
}

/// `G diag(d) Gᵀ`, symmetrized.
fn congruence(g: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let mut gd = g.clone();
    for (c, dc) in d.iter().enumerate() {
        gd.column_mut(c).scale_mut(*dc);
    }
    let cov = gd * g.transpose();
    (&cov + cov.transpose()) * 0.5
}

fn ci3_of(cov: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(cov.nrows(), |i, _| 3.0 * cov[(i, i)].max(0.0).sqrt())
}

fn finish(method: Method, sys: &StackedSystem, sol: Solution, sigma: &DVector<f64>) -> EstimationResult {
    let w = &sol.w;
    let d = DVector::from_fn(w.len(), |i, _| (w[i] * sigma[i]).powi(2));
    let covariance = congruence(&sol.pinv, &d);
    let ci3 = ci3_of(&covariance);
    let residuals = &sys.b * &sol.x - &sys.dp;
    EstimationResult {
        method,
        param_names: sys.param_names.clone(),
        x_hat: sol.x,
        covariance,
        ci3,
        residuals,
        weights: None,
        iterations: Vec::new(),
        converged: true,
        rank_loss: false,
    }
}

/// Unweighted least squares; covariance by the sandwich form using `sys.sigma`.
pub fn ols_estimate(sys: &StackedSystem) -> Result<EstimationResult> {
    let ones = DVector::from_element(sys.n_rows(), 1.0);
    let sol = solve_weighted(&sys.b, &sys.dp, &ones, &sys.param_names)?;
    Ok(finish(Method::Ols, sys, sol, &sys.sigma))
}

/// Weighted least squares with diagonal weights `w` (the objective weights
/// each squared residual by `w²`); covariance by the weighted sandwich using
/// `sys.sigma`.
pub fn wls_estimate(sys: &StackedSystem, w: &WeightMatrix) -> Result<EstimationResult> {
    if w.len() != sys.n_rows() {
        return Err(Error::Dimension(format!(
            "{} weights for {} rows",
            w.len(),
            sys.n_rows()
        )));
    }
    let sol = solve_weighted(&sys.b, &sys.dp, w.as_vector(), &sys.param_names)?;
    let mut res = finish(Method::Wls, sys, sol, &sys.sigma);
    res.weights = Some(w.as_vector().clone());
    Ok(res)
}

/// `wᵢ = a / σᵢ`.
pub fn optimal_weights(sigma: &DVector<f64>, a: f64) -> Result<WeightMatrix> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidArgument("scale factor must be positive".into()));
    }
    if sigma.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::InvalidArgument("dispersions must be positive".into()));
    }
    WeightMatrix::new(sigma.map(|s| a / s))
}

/// `wᵢ = σ₀ / (σ₀ + λ σᵢ)`; always in `(0, 1]`.
pub fn robust_weights(sigma: &DVector<f64>, sigma0: f64, lambda: f64) -> Result<WeightMatrix> {
    if !(sigma0 > 0.0) || !sigma0.is_finite() {
        return Err(Error::InvalidArgument("sigma0 must be positive".into()));
    }
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument("lambda must be non-negative".into()));
    }
    if sigma.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return Err(Error::InvalidArgument("dispersions must be non-negative".into()));
    }
    WeightMatrix::new(sigma.map(|s| sigma0 / (sigma0 + lambda * s)))
}

/// `σ² (Bᵀ B)⁻¹`: covariance of the unweighted estimate under i.i.d. noise.
pub fn iid_covariance(b: &DMatrix<f64>, sigma: f64) -> Result<DMatrix<f64>> {
    let names = placeholder_names(b.ncols());
    let ones = DVector::from_element(b.nrows(), 1.0);
    let sol = solve_weighted(b, &DVector::zeros(b.nrows()), &ones, &names)?;
    let info_inv = congruence(&sol.pinv, &ones);
    Ok(info_inv * sigma.powi(2))
}

/// Weighted sandwich covariance
/// `(Bᵀ W² B)⁻¹ (Bᵀ W² Σ² W² B) (Bᵀ W² B)⁻¹`.
pub fn sandwich_covariance(
    b: &DMatrix<f64>,
    w: &DVector<f64>,
    sigma: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let names = placeholder_names(b.ncols());
    let sol = solve_weighted(b, &DVector::zeros(b.nrows()), w, &names)?;
    let d = DVector::from_fn(w.len(), |i, _| (sol.w[i] * sigma[i]).powi(2));
    Ok(congruence(&sol.pinv, &d))
}

/// `(Bᵀ Σ⁻² B)⁻¹`: covariance of the estimate weighted with `W Σ = I`.
pub fn reduced_covariance(b: &DMatrix<f64>, sigma: &DVector<f64>) -> Result<DMatrix<f64>> {
    let names = placeholder_names(b.ncols());
    let inv = sigma.map(|s| 1.0 / s);
    let sol = solve_weighted(b, &DVector::zeros(b.nrows()), &inv, &names)?;
    let ones = DVector::from_element(b.nrows(), 1.0);
    Ok(congruence(&sol.pinv, &ones) / sol.w_max.powi(2))
}

fn placeholder_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

/// Per-parameter `x̂ ± 3 sqrt(cov_ii)` bounds.
pub fn confidence_intervals(result: &EstimationResult) -> Result<Vec<(f64, f64)>> {
    let cov = &result.covariance;
    let n = result.x_hat.len();
    if cov.shape() != (n, n) {
        return Err(Error::Dimension("covariance shape".into()));
    }
    (0..n)
        .map(|i| {
            let var = cov[(i, i)];
            if var < 0.0 || !var.is_finite() {
                return Err(Error::NegativeVariance { index: i, value: var });
            }
            let half = 3.0 * var.sqrt();
            Ok((result.x_hat[i] - half, result.x_hat[i] + half))
        })
        .collect()
}

/// Max over parameters of `|x - prev| / |prev|`.
pub fn max_relative_change(x: &DVector<f64>, prev: &DVector<f64>) -> f64 {
    let floor = 1e-12 * prev.amax();
    x.iter()
        .zip(prev.iter())
        .map(|(a, b)| {
            let denom = b.abs().max(floor).max(f64::MIN_POSITIVE);
            (a - b).abs() / denom
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsOptions {
    pub sigma0: f64,
    pub lambda: f64,
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        Self {
            sigma0: DEFAULT_SIGMA0,
            lambda: DEFAULT_LAMBDA,
            max_iter: DEFAULT_MAX_ITER,
            rel_tol: DEFAULT_REL_TOL,
        }
    }
}

/// Iteratively reweighted least squares.
///
/// The first pass weights rows with the robust rule applied to `sys.sigma`.
/// Every later pass re-estimates (configuration, axis) dispersions from the
/// previous pass's residuals, floors them at `σ₀`, rebuilds robust weights
/// and re-solves. The covariance of each pass is the weighted sandwich with
/// the dispersions that produced its weights. The loop stops once the max
/// per-parameter relative change drops below `rel_tol` (the first pass is
/// compared against the OLS estimate) or after `max_iter` passes.
pub fn irls(sys: &StackedSystem, opts: &IrlsOptions) -> Result<EstimationResult> {
    if opts.max_iter < 1 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    if !(opts.rel_tol >= 0.0) {
        return Err(Error::InvalidArgument("rel_tol must be non-negative".into()));
    }
    let start = ols_estimate(sys)?;
    let mut prev_x = start.x_hat;
    let mut sigma = sys.sigma.clone();
    let mut trace: Vec<Iteration> = Vec::new();
    let mut last: Option<EstimationResult> = None;
    let mut converged = false;
    let mut rank_loss = false;

    for k in 0..opts.max_iter {
        if k > 0 {
            let prev = last.as_ref().expect("previous iterate");
            let noise = dispersions_by_config(&sys.row_tags, &prev.residuals)?;
            sigma = build_sigma(&noise, &sys.row_tags, opts.sigma0)?;
        }
        let w = robust_weights(&sigma, opts.sigma0, opts.lambda)?;
        let sol = match solve_weighted(&sys.b, &sys.dp, w.as_vector(), &sys.param_names) {
            Ok(sol) => sol,
            Err(e @ Error::RankDeficient { .. }) if k > 0 => {
                log::warn!("reweighting stopped at pass {}: {e}", k + 1);
                rank_loss = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let mut res = finish(Method::Irls, sys, sol, &sigma);
        res.weights = Some(w.as_vector().clone());
        let change = max_relative_change(&res.x_hat, &prev_x);
        trace.push(Iteration {
            x_hat: res.x_hat.clone(),
            ci3: res.ci3.clone(),
            max_rel_change: change,
        });
        prev_x = res.x_hat.clone();
        last = Some(res);
        if change < opts.rel_tol {
            converged = true;
            break;
        }
    }

    let mut out = last.expect("first pass always succeeds or returns early");
    out.iterations = trace;
    out.converged = converged;
    out.rank_loss = rank_loss;
    Ok(out)
}
