//! Nonparametric bootstrap: plain SRSWR resampling of a statistic, and the
//! residual and paired resampling schemes for factor regressions.
//!
//! Replicate `b` draws from the stream keyed by `(seed, b)`, so the replicate
//! matrix is identical under any executor.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::capm::{fit_with, FactorDesign};
use crate::error::{Error, Result};
use crate::linalg::{LeastSquares, Matrix};
use crate::rng::{keyed_rng, Executor, KeyedRng, Sequential};
use crate::special::normal_quantile;
use crate::stats::{ceil_rank, sorted};
use crate::timeseries::ReturnPanel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum BootstrapScheme {
    Plain,
    Residual,
    Paired,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BootstrapSpec {
    pub replications: usize,
    pub seed: u64,
    pub scheme: BootstrapScheme,
    /// Two-sided interval level α (0.05 gives a 95% interval).
    pub alpha: f64,
}

impl BootstrapSpec {
    pub fn new(replications: usize, seed: u64, scheme: BootstrapScheme) -> Self {
        BootstrapSpec { replications, seed, scheme, alpha: 0.05 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidSpec("at least one replication is required".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidSpec(alloc::format!("interval level {} not in (0,1)", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StatisticSummary {
    pub label: String,
    /// The statistic on the original sample.
    pub estimate: f64,
    pub mean: f64,
    /// Square root of (1/B) Σ (T*_b − T̄)².
    pub std_error: f64,
    /// Order statistics T*_(⌈Bα/2⌉) and T*_(⌈B(1−α/2)⌉).
    pub percentile: Interval,
    /// estimate ± z_{1−α/2}·std_error.
    pub normal: Interval,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BootstrapSummary {
    pub spec: BootstrapSpec,
    pub statistics: Vec<StatisticSummary>,
    /// Resamples discarded for rank deficiency (paired scheme only).
    pub redraws: usize,
    /// B×k matrix of replicates, row b holding replicate b.
    pub replicates: Option<Matrix>,
}

impl BootstrapSummary {
    pub fn get(&self, label: &str) -> Option<&StatisticSummary> {
        self.statistics.iter().find(|s| s.label == label)
    }

    pub fn discard_replicates(mut self) -> Self {
        self.replicates = None;
        self
    }
}

fn summarize(
    spec: BootstrapSpec,
    labels: Vec<String>,
    estimates: &[f64],
    rows: Vec<Vec<f64>>,
    redraws: usize,
) -> BootstrapSummary {
    let b = rows.len();
    let k = labels.len();
    let mut data = Vec::with_capacity(b * k);
    for r in &rows {
        data.extend_from_slice(r);
    }
    let replicates = Matrix::from_vec(b, k, data).expect("rectangular replicates");
    let z = normal_quantile(1.0 - spec.alpha / 2.0);
    let lo_rank = ceil_rank(spec.alpha / 2.0, b);
    let hi_rank = ceil_rank(1.0 - spec.alpha / 2.0, b);
    let statistics = labels
        .into_iter()
        .enumerate()
        .map(|(j, label)| {
            let col = replicates.column(j);
            let mean = col.iter().sum::<f64>() / b as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / b as f64;
            let se = libm::sqrt(var);
            let s = sorted(&col);
            StatisticSummary {
                label,
                estimate: estimates[j],
                mean,
                std_error: se,
                percentile: Interval { lo: s[lo_rank - 1], hi: s[hi_rank - 1] },
                normal: Interval { lo: estimates[j] - z * se, hi: estimates[j] + z * se },
            }
        })
        .collect();
    BootstrapSummary { spec, statistics, redraws, replicates: Some(replicates) }
}

fn resample_indices(rng: &mut KeyedRng, n: usize, out: &mut Vec<usize>) {
    out.clear();
    out.extend((0..n).map(|_| rng.random_range(0..n)));
}

/// Bootstrap distribution of `statistic` over SRSWR resamples of `sample`.
pub fn bootstrap_statistic<F>(sample: &[f64], statistic: F, spec: BootstrapSpec) -> Result<BootstrapSummary>
where
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    bootstrap_statistic_with(&Sequential, sample, statistic, spec)
}

pub fn bootstrap_statistic_with<E, F>(
    exec: &E,
    sample: &[f64],
    statistic: F,
    spec: BootstrapSpec,
) -> Result<BootstrapSummary>
where
    E: Executor,
    F: Fn(&[f64]) -> f64 + Sync + Send,
{
    spec.validate()?;
    if sample.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = sample.len();
    let rows = exec.map_indexed(spec.replications, |b| {
        let mut rng = keyed_rng(spec.seed, b as u64);
        let mut idx = Vec::with_capacity(n);
        resample_indices(&mut rng, n, &mut idx);
        let resample: Vec<f64> = idx.iter().map(|&i| sample[i]).collect();
        alloc::vec![statistic(&resample)]
    });
    Ok(summarize(spec, alloc::vec!["statistic".into()], &[statistic(sample)], rows, 0))
}

fn coefficient_labels(design: &FactorDesign, panel: &ReturnPanel) -> Vec<String> {
    let coefs = design.coefficient_labels();
    if panel.nassets() == 1 {
        return coefs;
    }
    panel
        .assets()
        .iter()
        .flat_map(|a| coefs.iter().map(move |c| alloc::format!("{a}.{c}")))
        .collect()
}

// Column-major by asset: (α₁, β₁, …, α₂, β₂, …).
fn flatten_coefficients(coefs: &Matrix) -> Vec<f64> {
    (0..coefs.cols()).flat_map(|j| coefs.column(j)).collect()
}

/// Residual bootstrap: r*_b = X B̂ + ε*_b with residual rows resampled
/// jointly across assets, then refit on the fixed design.
pub fn residual_bootstrap_capm(design: &FactorDesign, panel: &ReturnPanel, spec: BootstrapSpec) -> Result<BootstrapSummary> {
    residual_bootstrap_capm_with(&Sequential, design, panel, spec)
}

pub fn residual_bootstrap_capm_with<E: Executor>(
    exec: &E,
    design: &FactorDesign,
    panel: &ReturnPanel,
    spec: BootstrapSpec,
) -> Result<BootstrapSummary> {
    spec.validate()?;
    let ls = LeastSquares::new(design.matrix())?;
    let fit = fit_with(&ls, design, panel.matrix(), panel.assets().to_vec())?;
    let fitted = fit.fitted(design);
    let residuals = &fit.residuals;
    let (n, p) = (panel.nobs(), panel.nassets());
    let rows = exec.map_indexed(spec.replications, |b| {
        let mut rng = keyed_rng(spec.seed, b as u64);
        let mut idx = Vec::with_capacity(n);
        resample_indices(&mut rng, n, &mut idx);
        let mut out = Vec::with_capacity(p * design.ncoef());
        for j in 0..p {
            let y: Vec<f64> = (0..n).map(|i| fitted[(i, j)] + residuals[(idx[i], j)]).collect();
            out.extend(ls.solve(&y).expect("design already factorized"));
        }
        out
    });
    Ok(summarize(
        spec,
        coefficient_labels(design, panel),
        &flatten_coefficients(&fit.coefficients),
        rows,
        0,
    ))
}

/// Paired bootstrap: resample (r_i, x_i) rows and refit. Rank-deficient
/// resamples are redrawn from the same stream; more than 10% redraws overall
/// is an error.
pub fn paired_bootstrap_capm(design: &FactorDesign, panel: &ReturnPanel, spec: BootstrapSpec) -> Result<BootstrapSummary> {
    paired_bootstrap_capm_with(&Sequential, design, panel, spec)
}

pub fn paired_bootstrap_capm_with<E: Executor>(
    exec: &E,
    design: &FactorDesign,
    panel: &ReturnPanel,
    spec: BootstrapSpec,
) -> Result<BootstrapSummary> {
    spec.validate()?;
    let kp1 = design.ncoef();
    let n = panel.nobs();
    if n < kp1 + 1 {
        return Err(Error::InsufficientData { needed: kp1 + 1, got: n });
    }
    let fit = crate::capm::fit_capm(design, panel)?;
    let max_redraws = spec.replications / 10;
    let x = design.matrix();
    let y = panel.matrix();
    let results = exec.map_indexed(spec.replications, |b| {
        let mut rng = keyed_rng(spec.seed, b as u64);
        let mut idx = Vec::with_capacity(n);
        let mut redraws = 0usize;
        loop {
            resample_indices(&mut rng, n, &mut idx);
            let xs = x.select_rows(&idx);
            match LeastSquares::new(&xs) {
                Ok(ls) => {
                    let ys = y.select_rows(&idx);
                    let mut out = Vec::with_capacity(y.cols() * kp1);
                    for j in 0..y.cols() {
                        out.extend(ls.solve(&ys.column(j)).expect("conforming"));
                    }
                    return Ok((out, redraws));
                }
                Err(_) => {
                    redraws += 1;
                    if redraws > max_redraws {
                        return Err(redraws);
                    }
                }
            }
        }
    });
    let mut rows = Vec::with_capacity(spec.replications);
    let mut total_redraws = 0;
    for r in results {
        match r {
            Ok((row, k)) => {
                total_redraws += k;
                rows.push(row);
            }
            Err(k) => {
                total_redraws += k;
            }
        }
    }
    if rows.len() < spec.replications || total_redraws > max_redraws {
        return Err(Error::DegenerateResampling { redraws: total_redraws, replications: spec.replications });
    }
    Ok(summarize(
        spec,
        coefficient_labels(design, panel),
        &flatten_coefficients(&fit.coefficients),
        rows,
        total_redraws,
    ))
}
