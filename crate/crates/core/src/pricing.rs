//! Risk-neutral binomial lattice and geometric Brownian motion.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::{keyed_rng, Executor, Sequential};
use crate::special::normal_cdf;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinomialModel {
    pub p0: f64,
    pub u: f64,
    pub d: f64,
    /// Annual rate, compounded `n` times per unit time.
    pub r: f64,
    pub n: u32,
    pub t: f64,
}

impl BinomialModel {
    /// The lattice that converges to GBM with volatility σ:
    /// u = e^{σ/√n}, d = e^{−σ/√n}.
    pub fn gbm_limit(p0: f64, r: f64, sigma: f64, n: u32, t: f64) -> Self {
        let h = sigma / libm::sqrt(n as f64);
        BinomialModel { p0, u: libm::exp(h), d: libm::exp(-h), r, n, t }
    }

    /// 1 + r/n.
    pub fn growth(&self) -> f64 {
        1.0 + self.r / self.n as f64
    }

    /// Number of steps n·t.
    pub fn steps(&self) -> Result<usize> {
        let nt = self.n as f64 * self.t;
        let k = libm::round(nt);
        if !(k >= 1.0) || (nt - k).abs() > 1e-9 * nt.max(1.0) {
            return Err(Error::InvalidInput(alloc::format!("n*t = {nt} is not a positive integer")));
        }
        Ok(k as usize)
    }

    fn validate(&self) -> Result<()> {
        if !(self.p0 > 0.0) || !self.p0.is_finite() {
            return Err(Error::InvalidInput("initial price must be positive".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidInput("at least one step per unit time".into()));
        }
        if !(self.d > 0.0 && self.d < self.u) {
            return Err(Error::InvalidInput("need 0 < d < u".into()));
        }
        Ok(())
    }
}

/// p̂ = ((1+r/n) − d)/(u − d); defined only without arbitrage.
pub fn risk_neutral_prob(model: &BinomialModel) -> Result<f64> {
    model.validate()?;
    let growth = model.growth();
    if !(model.d < growth && growth < model.u) {
        return Err(Error::ArbitrageError { d: model.d, growth, u: model.u });
    }
    Ok((growth - model.d) / (model.u - model.d))
}

/// Distribution of the price after `k` steps, indexed by the up-move count.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepDistribution {
    pub step: usize,
    /// P₀ u^j d^{k−j} for j = 0..=k.
    pub prices: Vec<f64>,
    pub probabilities: Vec<f64>,
}

impl StepDistribution {
    pub fn expectation(&self) -> f64 {
        self.prices.iter().zip(&self.probabilities).map(|(p, q)| p * q).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Lattice {
    pub model: BinomialModel,
    pub p_hat: f64,
    /// Steps 0..=n·t.
    pub steps: Vec<StepDistribution>,
    /// E[P_k (1+r/n)^{−k}] under p̂, one per step.
    pub discounted_expectations: Vec<f64>,
    /// Simulated price paths, each of length n·t + 1.
    pub paths: Vec<Vec<f64>>,
}

impl Lattice {
    pub fn terminal(&self) -> &StepDistribution {
        self.steps.last().expect("lattice has step 0")
    }
}

/// Exact lattice distribution at every step, built by convolving the
/// one-step law, plus `paths` simulated paths keyed by `seed`.
pub fn binomial_lattice(model: &BinomialModel, seed: u64, paths: usize) -> Result<Lattice> {
    let p_hat = risk_neutral_prob(model)?;
    let k_max = model.steps()?;
    let growth = model.growth();
    let mut steps = Vec::with_capacity(k_max + 1);
    let mut probs = vec![1.0];
    let mut discounted_expectations = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k > 0 {
            let mut next = vec![0.0; k + 1];
            for (j, q) in probs.iter().enumerate() {
                next[j] += q * (1.0 - p_hat);
                next[j + 1] += q * p_hat;
            }
            probs = next;
        }
        let prices: Vec<f64> = (0..=k)
            .map(|j| model.p0 * libm::pow(model.u, j as f64) * libm::pow(model.d, (k - j) as f64))
            .collect();
        let dist = StepDistribution { step: k, prices, probabilities: probs.clone() };
        discounted_expectations.push(dist.expectation() / libm::pow(growth, k as f64));
        steps.push(dist);
    }
    let simulated = (0..paths)
        .map(|i| {
            let mut rng = keyed_rng(seed, i as u64);
            let mut path = Vec::with_capacity(k_max + 1);
            let mut p = model.p0;
            path.push(p);
            for _ in 0..k_max {
                p *= if rng.random::<f64>() < p_hat { model.u } else { model.d };
                path.push(p);
            }
            path
        })
        .collect();
    Ok(Lattice { model: *model, p_hat, steps, discounted_expectations, paths: simulated })
}

/// Kolmogorov–Smirnov distance between the lattice law of ln(P/P₀) and
/// N(mean, sd²).
pub fn ks_distance_to_normal(dist: &StepDistribution, p0: f64, mean: f64, sd: f64) -> f64 {
    let mut cdf = 0.0;
    let mut worst = 0.0f64;
    for (price, q) in dist.prices.iter().zip(&dist.probabilities) {
        let phi = normal_cdf((libm::log(price / p0) - mean) / sd);
        worst = worst.max((cdf - phi).abs());
        cdf += q;
        worst = worst.max((cdf - phi).abs());
    }
    worst
}

/// KS distance of the terminal lattice law from its lognormal limit
/// ln(P_t/P₀) ~ N((r − σ²/2)t, σ²t).
pub fn lattice_ks_to_gbm(p0: f64, r: f64, sigma: f64, n: u32, t: f64) -> Result<f64> {
    let model = BinomialModel::gbm_limit(p0, r, sigma, n, t);
    let lattice = binomial_lattice(&model, 0, 0)?;
    let mean = (r - 0.5 * sigma * sigma) * t;
    Ok(ks_distance_to_normal(lattice.terminal(), p0, mean, sigma * libm::sqrt(t)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case", tag = "kind"))]
pub enum Measure {
    RealWorld,
    /// The drift is replaced by `rate`.
    RiskNeutral { rate: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GbmParams {
    pub p0: f64,
    pub mu: f64,
    pub sigma: f64,
    pub measure: Measure,
}

impl GbmParams {
    pub fn drift(&self) -> f64 {
        match self.measure {
            Measure::RealWorld => self.mu,
            Measure::RiskNeutral { rate } => rate,
        }
    }
}

/// Terminal prices P₀ exp{(m − σ²/2)t + σ√t Z}, one normal draw per path.
pub fn simulate_gbm(params: &GbmParams, t: f64, paths: usize, seed: u64) -> Result<Vec<f64>> {
    simulate_gbm_with(&Sequential, params, t, paths, seed)
}

pub fn simulate_gbm_with<E: Executor>(exec: &E, params: &GbmParams, t: f64, paths: usize, seed: u64) -> Result<Vec<f64>> {
    if paths == 0 {
        return Err(Error::InvalidInput("at least one path".into()));
    }
    if !(params.p0 > 0.0) || !(params.sigma >= 0.0) || !(t >= 0.0) {
        return Err(Error::InvalidInput("need p0 > 0, sigma >= 0, t >= 0".into()));
    }
    let drift = (params.drift() - 0.5 * params.sigma * params.sigma) * t;
    let vol = params.sigma * libm::sqrt(t);
    let p0 = params.p0;
    if vol == 0.0 {
        return Ok(vec![p0 * libm::exp(drift); paths]);
    }
    Ok(exec.map_indexed(paths, |i| {
        let z: f64 = keyed_rng(seed, i as u64).sample(StandardNormal);
        p0 * libm::exp(drift + vol * z)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GbmSummary {
    pub paths: usize,
    pub mean: f64,
    pub std_dev: f64,
    /// Monte Carlo standard error of `mean`.
    pub mc_se: f64,
    pub log_mean: f64,
    pub log_variance: f64,
}

pub fn summarize_terminal(prices: &[f64]) -> GbmSummary {
    let n = prices.len() as f64;
    let logs: Vec<f64> = prices.iter().map(|p| libm::log(*p)).collect();
    let mean = crate::stats::mean(prices);
    let sd = if prices.len() > 1 { crate::stats::sample_std(prices) } else { 0.0 };
    GbmSummary {
        paths: prices.len(),
        mean,
        std_dev: sd,
        mc_se: sd / libm::sqrt(n),
        log_mean: crate::stats::mean(&logs),
        log_variance: if prices.len() > 1 { crate::stats::sample_variance(&logs) } else { 0.0 },
    }
}
