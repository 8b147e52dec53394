//! Portfolio construction and volatility-risk decomposition: cap, equal and
//! Markowitz weights, the idiosyncratic diversification bound, MCTR/CCTR and
//! the Bayesian Monte Carlo over inverse-Wishart covariance draws.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::covariance::{CovarianceEstimate, InverseWishartPosterior};
use crate::error::{Error, Result};
use crate::linalg::{dot, solve_general, Cholesky, Matrix};
use crate::rng::{keyed_rng, Executor, Sequential};
use crate::stats::{ceil_rank, sorted};

const BUDGET_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum WeightScheme {
    IndexCap,
    Equal,
    Markowitz,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Portfolio {
    assets: Vec<String>,
    weights: Vec<f64>,
    scheme: WeightScheme,
}

impl Portfolio {
    /// Weights must sum to one within 1e-10; index-cap and equal portfolios
    /// must also be long-only.
    pub fn new(assets: Vec<String>, weights: Vec<f64>, scheme: WeightScheme) -> Result<Self> {
        if assets.len() != weights.len() {
            return Err(Error::ShapeError("one weight per asset".into()));
        }
        if assets.is_empty() {
            return Err(Error::InvalidInput("portfolio needs at least one asset".into()));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidInput("non-finite weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > BUDGET_TOL {
            return Err(Error::InvalidInput(alloc::format!("weights sum to {total}, not 1")));
        }
        if matches!(scheme, WeightScheme::IndexCap | WeightScheme::Equal) && weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidInput("long-only scheme with a negative weight".into()));
        }
        Ok(Portfolio { assets, weights, scheme })
    }

    /// Rescales non-negative raw weights (e.g. index percentages) to sum to one.
    pub fn normalized(assets: Vec<String>, raw: &[f64], scheme: WeightScheme) -> Result<Self> {
        let total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("weights must have a positive sum".into()));
        }
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        Portfolio::new(assets, weights, scheme)
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// M_{ω:P}, the largest weight.
    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_long_only(&self) -> bool {
        self.weights.iter().all(|w| *w >= 0.0)
    }
}

/// ω_i = 1/P.
pub fn equal_weight(assets: &[String]) -> Result<Portfolio> {
    if assets.is_empty() {
        return Err(Error::InvalidInput("portfolio needs at least one asset".into()));
    }
    let w = 1.0 / assets.len() as f64;
    Portfolio::new(assets.to_vec(), vec![w; assets.len()], WeightScheme::Equal)
}

fn check_dims(port: &Portfolio, cov: &CovarianceEstimate) -> Result<()> {
    if cov.dim() != port.len() {
        return Err(Error::ShapeError(alloc::format!(
            "{} weights against a {}x{} covariance",
            port.len(),
            cov.dim(),
            cov.dim()
        )));
    }
    Ok(())
}

/// σ_P = √(ωᵀΣω).
pub fn portfolio_volatility(port: &Portfolio, cov: &CovarianceEstimate) -> Result<f64> {
    check_dims(port, cov)?;
    Ok(libm::sqrt(cov.matrix().quadratic_form(port.weights())?.max(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IdiosyncraticBound {
    /// ωᵀΣ_εω.
    pub risk: f64,
    /// σ²_max · M_{ω:P}.
    pub bound: f64,
}

/// Idiosyncratic risk of a portfolio and its diversification bound.
pub fn idiosyncratic_bound(port: &Portfolio, idio: &CovarianceEstimate) -> Result<IdiosyncraticBound> {
    check_dims(port, idio)?;
    if !idio.matrix().is_diagonal() {
        return Err(Error::InvalidInput("idiosyncratic covariance must be diagonal".into()));
    }
    idiosyncratic_bound_diag(port.weights(), &idio.variances())
}

/// [`idiosyncratic_bound`] for a diagonal given by its entries.
pub fn idiosyncratic_bound_diag(weights: &[f64], variances: &[f64]) -> Result<IdiosyncraticBound> {
    if weights.len() != variances.len() || weights.is_empty() {
        return Err(Error::ShapeError("one variance per weight".into()));
    }
    if variances.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidInput("negative idiosyncratic variance".into()));
    }
    let risk = weights.iter().zip(variances).map(|(w, s)| w * w * s).sum();
    let sigma_max = variances.iter().copied().fold(0.0, f64::max);
    let max_w = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(IdiosyncraticBound { risk, bound: sigma_max * max_w })
}

/// Volatility decomposition of a fixed-weight portfolio.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RiskDecomposition {
    pub sigma_p: f64,
    /// ϱ = Σω/σ_P.
    pub mctr: Vec<f64>,
    /// ζ_j = ω_j ϱ_j.
    pub cctr: Vec<f64>,
    /// ℙ(ζ_j > 0) across posterior draws; empty for a single covariance.
    pub prob_positive: Vec<f64>,
    pub draws_used: usize,
    /// 2.5% and 97.5% posterior quantiles of σ_P (Monte Carlo only).
    pub sigma_p_interval: Option<(f64, f64)>,
}

/// Per-draw output of the Bayesian Monte Carlo.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawRisk {
    pub sigma_p: f64,
    pub mctr: Vec<f64>,
    pub cctr: Vec<f64>,
}

fn decompose(weights: &[f64], cov: &Matrix) -> Result<DrawRisk> {
    let sw = cov.matvec(weights)?;
    let var = dot(weights, &sw);
    if !(var > 0.0) {
        return Err(Error::DegeneratePortfolio);
    }
    let sigma_p = libm::sqrt(var);
    let mctr: Vec<f64> = sw.iter().map(|v| v / sigma_p).collect();
    let cctr = weights.iter().zip(&mctr).map(|(w, r)| w * r).collect();
    Ok(DrawRisk { sigma_p, mctr, cctr })
}

/// MCTR and CCTR under one covariance matrix.
pub fn risk_decomposition(port: &Portfolio, cov: &CovarianceEstimate) -> Result<RiskDecomposition> {
    check_dims(port, cov)?;
    let d = decompose(port.weights(), cov.matrix())?;
    Ok(RiskDecomposition {
        sigma_p: d.sigma_p,
        mctr: d.mctr,
        cctr: d.cctr,
        prob_positive: Vec::new(),
        draws_used: 1,
        sigma_p_interval: None,
    })
}

/// Per-draw σ_P, ϱ and ζ for draws 0..draws of the stream keyed by `seed`.
pub fn bayes_mc_draws_with<E: Executor>(
    exec: &E,
    port: &Portfolio,
    post: &InverseWishartPosterior,
    draws: usize,
    seed: u64,
) -> Result<Vec<DrawRisk>> {
    if draws == 0 {
        return Err(Error::InvalidInput("at least one draw is required".into()));
    }
    if post.dim() != port.len() {
        return Err(Error::ShapeError("posterior dimension differs from portfolio".into()));
    }
    let sampler = post.sampler()?;
    let weights = port.weights();
    exec.map_indexed(draws, |i| {
        let mut rng = keyed_rng(seed, i as u64);
        decompose(weights, &sampler.draw(&mut rng))
    })
    .into_iter()
    .collect()
}

/// Posterior means of σ_P, ϱ, ζ and ℙ(ζ_j > 0) over the draws.
/// Exact zeros count as not positive.
pub fn summarize_draws(draws: &[DrawRisk]) -> RiskDecomposition {
    let n = draws.len();
    let p = draws[0].mctr.len();
    let nf = n as f64;
    let mut mctr = vec![0.0; p];
    let mut cctr = vec![0.0; p];
    let mut positive = vec![0usize; p];
    for d in draws {
        for j in 0..p {
            mctr[j] += d.mctr[j];
            cctr[j] += d.cctr[j];
            if d.cctr[j] > 0.0 {
                positive[j] += 1;
            }
        }
    }
    let sigmas = sorted(&draws.iter().map(|d| d.sigma_p).collect::<Vec<_>>());
    RiskDecomposition {
        sigma_p: sigmas.iter().sum::<f64>() / nf,
        mctr: mctr.into_iter().map(|v| v / nf).collect(),
        cctr: cctr.into_iter().map(|v| v / nf).collect(),
        prob_positive: positive.into_iter().map(|c| c as f64 / nf).collect(),
        draws_used: n,
        sigma_p_interval: Some((sigmas[ceil_rank(0.025, n) - 1], sigmas[ceil_rank(0.975, n) - 1])),
    }
}

/// Bayesian Monte Carlo estimate of the contribution to risk.
pub fn bayes_mc_risk(port: &Portfolio, post: &InverseWishartPosterior, draws: usize, seed: u64) -> Result<RiskDecomposition> {
    bayes_mc_risk_with(&Sequential, port, post, draws, seed)
}

pub fn bayes_mc_risk_with<E: Executor>(
    exec: &E,
    port: &Portfolio,
    post: &InverseWishartPosterior,
    draws: usize,
    seed: u64,
) -> Result<RiskDecomposition> {
    Ok(summarize_draws(&bayes_mc_draws_with(exec, port, post, draws, seed)?))
}

/// Result of a mean-variance optimization.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MarkowitzSolution {
    pub portfolio: Portfolio,
    pub variance: f64,
    /// The return constraint was dropped because all expected returns are
    /// equal; the portfolio is the global minimum-variance one.
    pub return_constraint_dropped: bool,
    pub active_set_iterations: usize,
    /// Largest violation among the KKT conditions.
    pub kkt_residual: f64,
}

/// Global minimum-variance portfolio Σ⁻¹1/(1ᵀΣ⁻¹1), short sales allowed.
pub fn global_minimum_variance(cov: &CovarianceEstimate) -> Result<Vec<f64>> {
    let chol = Cholesky::new(cov.matrix())?;
    let a = chol.solve(&vec![1.0; cov.dim()]);
    let total: f64 = a.iter().sum();
    Ok(a.into_iter().map(|v| v / total).collect())
}

fn means_all_equal(mean: &[f64]) -> bool {
    let scale = mean.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let lo = mean.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo <= 1e-14 * scale
}

/// Minimizes ωᵀΣω subject to ωᵀ1 = 1 and ωᵀμ = target.
///
/// Without the sign constraint the two-multiplier Lagrangian gives the
/// answer in closed form. With `long_only` a primal active-set method runs
/// from a feasible two-asset vertex, releasing bounds with negative
/// multipliers; it stops after 10·P + 20 iterations.
pub fn markowitz_optimize(
    assets: &[String],
    mean: &[f64],
    cov: &CovarianceEstimate,
    target: f64,
    long_only: bool,
) -> Result<MarkowitzSolution> {
    let p = cov.dim();
    if mean.len() != p || assets.len() != p {
        return Err(Error::ShapeError("mean, labels and covariance disagree in size".into()));
    }
    if p == 0 {
        return Err(Error::InvalidInput("no assets".into()));
    }
    let chol = Cholesky::new(cov.matrix())?;
    let dropped = means_all_equal(mean);
    let lo = mean.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = mean.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if long_only && !dropped {
        let slack = 1e-12 * (hi - lo).abs().max(hi.abs());
        if target < lo - slack || target > hi + slack {
            return Err(Error::InfeasibleTarget { target, min: lo, max: hi });
        }
    }

    let ones = vec![1.0; p];
    let a = chol.solve(&ones);
    let closed_form = if dropped {
        let total: f64 = a.iter().sum();
        a.iter().map(|v| v / total).collect::<Vec<f64>>()
    } else {
        let b = chol.solve(mean);
        let aa: f64 = a.iter().sum();
        let bb: f64 = b.iter().sum();
        let cc = dot(mean, &b);
        let d = aa * cc - bb * bb;
        (0..p)
            .map(|i| ((cc - bb * target) * a[i] + (aa * target - bb) * b[i]) / d)
            .collect()
    };

    let (weights, iterations) = if !long_only || closed_form.iter().all(|w| *w >= 0.0) {
        (closed_form, 0)
    } else {
        let target = if dropped { None } else { Some(target.clamp(lo, hi)) };
        active_set(cov.matrix(), mean, target)?
    };

    let variance = cov.matrix().quadratic_form(&weights)?;
    let kkt_residual = kkt_residual(cov.matrix(), mean, if dropped { None } else { Some(target) }, &weights, long_only);
    let portfolio = Portfolio {
        assets: assets.to_vec(),
        weights,
        scheme: WeightScheme::Markowitz,
    };
    Ok(MarkowitzSolution {
        portfolio,
        variance,
        return_constraint_dropped: dropped,
        active_set_iterations: iterations,
        kkt_residual,
    })
}

fn constraint_rows(mean: &[f64], target: Option<f64>) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rows = vec![vec![1.0; mean.len()]];
    let mut rhs = vec![1.0];
    if let Some(t) = target {
        rows.push(mean.to_vec());
        rhs.push(t);
    }
    (rows, rhs)
}

/// Solves the equality-constrained problem on `free`, returning the free
/// weights and the equality multipliers λ (with 2Σω = Aᵀλ on `free`).
fn solve_on_support(
    sigma: &Matrix,
    rows: &[Vec<f64>],
    rhs: &[f64],
    free: &[usize],
) -> Option<(Vec<f64>, Vec<f64>)> {
    let f = free.len();
    let m = rows.len();
    let dim = f + m;
    let mut kkt = Matrix::zeros(dim, dim);
    for (a, &i) in free.iter().enumerate() {
        for (b, &j) in free.iter().enumerate() {
            kkt[(a, b)] = 2.0 * sigma[(i, j)];
        }
        for (r, row) in rows.iter().enumerate() {
            kkt[(a, f + r)] = -row[i];
            kkt[(f + r, a)] = row[i];
        }
    }
    let mut b = vec![0.0; dim];
    b[f..].copy_from_slice(rhs);
    let x = solve_general(&kkt, &b, 1e-13)?;
    Some((x[..f].to_vec(), x[f..].to_vec()))
}

fn active_set(sigma: &Matrix, mean: &[f64], target: Option<f64>) -> Result<(Vec<f64>, usize)> {
    let p = mean.len();
    let (rows, rhs) = constraint_rows(mean, target);
    let mut w = vec![0.0; p];
    let mut free = vec![false; p];
    match target {
        Some(t) => {
            let i = (0..p).min_by(|&a, &b| mean[a].total_cmp(&mean[b])).unwrap();
            let j = (0..p).max_by(|&a, &b| mean[a].total_cmp(&mean[b])).unwrap();
            let theta = (mean[j] - t) / (mean[j] - mean[i]);
            w[i] = theta;
            w[j] = 1.0 - theta;
            free[i] = true;
            free[j] = true;
        }
        None => {
            let i = (0..p).min_by(|&a, &b| sigma[(a, a)].total_cmp(&sigma[(b, b)])).unwrap();
            w[i] = 1.0;
            free[i] = true;
        }
    }
    let scale = sigma.max_abs().max(f64::MIN_POSITIVE);
    let cap = 10 * p + 20;
    for iter in 1..=cap {
        let support: Vec<usize> = (0..p).filter(|&i| free[i]).collect();
        let solved = solve_on_support(sigma, &rows, &rhs, &support).or_else(|| {
            // the return row is redundant on a support of equal means
            if rows.len() == 2 {
                let (r1, b1) = constraint_rows(mean, None);
                let sol = solve_on_support(sigma, &r1, &b1, &support)?;
                Some((sol.0, vec![sol.1[0], 0.0]))
            } else {
                None
            }
        });
        let (w_new, lambda) = solved.ok_or(Error::SingularCovariance)?;
        let step: Vec<f64> = support.iter().zip(&w_new).map(|(&i, &v)| v - w[i]).collect();
        let step_norm = step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if step_norm <= 1e-13 {
            // multipliers of the bounds held at zero: ∂L/∂ω_i = 2(Σω)_i − (Aᵀλ)_i
            let sw = sigma.matvec(&w)?;
            let mut worst: Option<(usize, f64)> = None;
            for i in (0..p).filter(|&i| !free[i]) {
                let g = 2.0 * sw[i] - rows.iter().zip(&lambda).map(|(r, l)| r[i] * l).sum::<f64>();
                if g < -1e-12 * scale && worst.is_none_or(|(_, gw)| g < gw) {
                    worst = Some((i, g));
                }
            }
            match worst {
                None => return Ok((w, iter)),
                Some((i, _)) => free[i] = true,
            }
        } else {
            let mut alpha = 1.0;
            let mut blocking = None;
            for (k, &i) in support.iter().enumerate() {
                if step[k] < 0.0 {
                    let ratio = -w[i] / step[k];
                    if ratio < alpha {
                        alpha = ratio;
                        blocking = Some(i);
                    }
                }
            }
            for (k, &i) in support.iter().enumerate() {
                w[i] += alpha * step[k];
            }
            if let Some(i) = blocking {
                w[i] = 0.0;
                free[i] = false;
            }
        }
    }
    Ok((w, cap))
}

fn kkt_residual(sigma: &Matrix, mean: &[f64], target: Option<f64>, w: &[f64], long_only: bool) -> f64 {
    let (rows, rhs) = constraint_rows(mean, target);
    let mut worst = rows
        .iter()
        .zip(&rhs)
        .map(|(r, b)| (dot(r, w) - b).abs())
        .fold(0.0, f64::max);
    let support: Vec<usize> = (0..w.len()).filter(|&i| !long_only || w[i] > 0.0).collect();
    let lambda = solve_on_support(sigma, &rows, &rhs, &support)
        .or_else(|| {
            let (r1, b1) = constraint_rows(mean, None);
            solve_on_support(sigma, &r1, &b1, &support).map(|(x, l)| (x, vec![l[0], 0.0]))
        })
        .map(|(_, l)| l);
    let Some(lambda) = lambda else {
        return f64::INFINITY;
    };
    // stationarity is measured relative to the size of the gradient terms
    let scale = sigma.max_abs().max(f64::MIN_POSITIVE);
    let Ok(sw) = sigma.matvec(w) else {
        return f64::INFINITY;
    };
    for i in 0..w.len() {
        let g = (2.0 * sw[i] - rows.iter().zip(&lambda).map(|(r, l)| r[i] * l).sum::<f64>()) / scale;
        if !long_only || w[i] > 0.0 {
            worst = worst.max(g.abs());
        } else {
            worst = worst.max((-g).max(0.0)).max((-w[i]).max(0.0));
        }
    }
    worst
}
