//! The before/during event comparison of index-cap, equal and Markowitz
//! portfolios.
//!
//! Weights are fixed from information available before the event (the cap
//! file and the first segment's returns) and then held across both
//! segments.

use chrono::NaiveDate;
use riskpipe_core::bootstrap::{paired_bootstrap_capm_with, BootstrapScheme, BootstrapSpec};
use riskpipe_core::capm::{fit_capm, risk_premium, FactorDesign};
use riskpipe_core::covariance::{build_posterior, posterior_mode, sample_covariance, CovarianceEstimate};
use riskpipe_core::efficiency::{efficiency_battery, EfficiencyVerdict};
use riskpipe_core::portfolio::{
    bayes_mc_risk_with, equal_weight, markowitz_optimize, portfolio_volatility, risk_decomposition, Portfolio,
    RiskDecomposition, WeightScheme,
};
use riskpipe_core::tailrisk::{tail_risk_levels, TailRiskReport};
use riskpipe_core::timeseries::{PriceSeries, ReturnPanel};
use riskpipe_core::Executor;
use serde::{Deserialize, Serialize};

use crate::config::{CovarianceMode, ExperimentConfig};
use crate::error::{PipelineError, Result};
use crate::ingest::{read_prices_path, read_weights_path, weights_for};

pub const SCHEMA_VERSION: &str = "riskpipe.comparison/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Segment {
    Before,
    During,
}

impl Segment {
    pub fn label(self) -> &'static str {
        match self {
            Segment::Before => "before",
            Segment::During => "during",
        }
    }
}

pub fn scheme_label(s: WeightScheme) -> &'static str {
    match s {
        WeightScheme::IndexCap => "index-cap",
        WeightScheme::Equal => "equal",
        WeightScheme::Markowitz => "markowitz",
        WeightScheme::Custom => "custom",
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub software_version: String,
    pub assets: Vec<String>,
    pub first_date: NaiveDate,
    pub event_date: NaiveDate,
    pub last_date: NaiveDate,
    pub n_before: usize,
    pub n_during: usize,
    pub dropped_rows: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeWeights {
    pub scheme: WeightScheme,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkowitzInfo {
    pub target_mu: f64,
    pub variance: f64,
    pub return_constraint_dropped: bool,
    pub active_set_iterations: usize,
    pub kkt_residual: f64,
    /// Posterior shrinkage weight q (Bayesian covariance only).
    pub shrinkage_weight: Option<f64>,
}

/// One scheme on one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRow {
    pub scheme: WeightScheme,
    pub segment: Segment,
    pub n: usize,
    /// Per-period standard deviation of the portfolio return.
    pub volatility: f64,
    /// `volatility` × √periods_per_year.
    pub volatility_annualized: f64,
    pub tail: Vec<TailRiskReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeRisk {
    pub scheme: WeightScheme,
    pub decomposition: RiskDecomposition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetBeta {
    pub asset: String,
    pub alpha: f64,
    pub beta: f64,
    pub se_alpha: f64,
    pub se_beta: f64,
    pub bootstrap_se_alpha: Option<f64>,
    pub bootstrap_se_beta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketSection {
    pub column: String,
    pub efficiency: EfficiencyVerdict,
    /// First-segment CAPM fits on risk premia.
    pub capm: Vec<AssetBeta>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub schema: String,
    pub config: ExperimentConfig,
    pub metadata: Metadata,
    pub weights: Vec<SchemeWeights>,
    pub markowitz: MarkowitzInfo,
    pub rows: Vec<SegmentRow>,
    /// Contributions to first-segment volatility.
    pub risk_contributions: Vec<SchemeRisk>,
    pub market: Option<MarketSection>,
}

impl ComparisonReport {
    pub fn row(&self, scheme: WeightScheme, segment: Segment) -> Option<&SegmentRow> {
        self.rows.iter().find(|r| r.scheme == scheme && r.segment == segment)
    }

    pub fn weights_of(&self, scheme: WeightScheme) -> Option<&[f64]> {
        self.weights.iter().find(|w| w.scheme == scheme).map(|w| w.weights.as_slice())
    }
}

/// Everything the experiment reads from disk.
#[derive(Debug, Clone)]
pub struct ExperimentData {
    /// Aligned log-returns of the configured assets.
    pub panel: ReturnPanel,
    /// Market log-returns on the panel's dates.
    pub market_returns: Option<Vec<f64>>,
    /// Full market price history for the efficiency battery.
    pub market_prices: Option<PriceSeries>,
    /// Raw cap weights in panel asset order.
    pub cap_weights: Vec<f64>,
    pub dropped_rows: usize,
}

pub fn load(config: &ExperimentConfig) -> Result<ExperimentData> {
    let file = read_prices_path(&config.prices)?;
    let mut columns = config.assets.clone();
    if let Some(m) = &config.market {
        if !columns.contains(m) {
            columns.push(m.clone());
        }
    }
    let ing = file.select(&columns)?;
    let names: Vec<&str> = config.assets.iter().map(String::as_str).collect();
    let panel = ing.panel.select_assets(&names)?;
    let (market_returns, market_prices) = match &config.market {
        Some(m) => {
            let j = ing.panel.asset_index(m).expect("market column was selected");
            (Some(ing.panel.column(j)), Some(file.series(m)?))
        }
        None => (None, None),
    };
    let cap_weights = weights_for(&config.assets, &read_weights_path(&config.weights)?)?;
    Ok(ExperimentData { panel, market_returns, market_prices, cap_weights, dropped_rows: ing.dropped_rows() })
}

/// Loads the configured files and runs the comparison.
pub fn run_comparison<E: Executor>(config: &ExperimentConfig, exec: &E) -> Result<ComparisonReport> {
    config.validate()?;
    compare(config, &load(config)?, exec)
}

fn segment_row(
    config: &ExperimentConfig,
    port: &Portfolio,
    panel: &ReturnPanel,
    segment: Segment,
) -> Result<SegmentRow> {
    let cov = sample_covariance(panel)?;
    let volatility = portfolio_volatility(port, &cov)?;
    let returns = panel.portfolio_returns(port.weights())?;
    Ok(SegmentRow {
        scheme: port.scheme(),
        segment,
        n: panel.nobs(),
        volatility,
        volatility_annualized: volatility * (config.periods_per_year as f64).sqrt(),
        tail: tail_risk_levels(&returns.values, &config.var_levels)?,
    })
}

/// Runs the experiment on already loaded data.
pub fn compare<E: Executor>(config: &ExperimentConfig, data: &ExperimentData, exec: &E) -> Result<ComparisonReport> {
    let panel = &data.panel;
    let (before, during) = panel.split_at(config.event_date);
    if before.nobs() < 2 || during.nobs() < 2 {
        return Err(PipelineError::Config(format!(
            "event_date {} must leave at least two returns on each side (got {} before, {} during)",
            config.event_date,
            before.nobs(),
            during.nobs()
        )));
    }
    let assets = panel.assets().to_vec();
    let p = assets.len();

    let cap = Portfolio::normalized(assets.clone(), &data.cap_weights, WeightScheme::IndexCap)?;
    let equal = equal_weight(&assets)?;

    // Markowitz inputs come from the first segment only.
    let n = before.nobs();
    let mu: Vec<f64> = (0..p)
        .map(|j| before.column(j).iter().sum::<f64>() / n as f64)
        .collect();
    let sample = sample_covariance(&before)?;
    let (cov, posterior): (CovarianceEstimate, _) = match config.covariance {
        CovarianceMode::Sample => (sample.clone(), None),
        CovarianceMode::Bayes => {
            let post = build_posterior(&sample, n, None, config.c)?;
            (posterior_mode(&post)?, Some(post))
        }
    };
    let target = config.target_mu.unwrap_or_else(|| mu.iter().sum::<f64>() / p as f64);
    let solution = markowitz_optimize(&assets, &mu, &cov, target, config.long_only)?;
    let markowitz = solution.portfolio.clone();

    let schemes = [&cap, &equal, &markowitz];
    let mut rows = Vec::with_capacity(6);
    for port in schemes {
        rows.push(segment_row(config, port, &before, Segment::Before)?);
        rows.push(segment_row(config, port, &during, Segment::During)?);
    }

    let risk_contributions = schemes
        .iter()
        .map(|port| {
            let decomposition = match &posterior {
                Some(post) => bayes_mc_risk_with(exec, port, post, config.mc_draws, config.seed)?,
                None => risk_decomposition(port, &sample)?,
            };
            Ok(SchemeRisk { scheme: port.scheme(), decomposition })
        })
        .collect::<Result<Vec<_>>>()?;

    let market = match (&config.market, &data.market_returns, &data.market_prices) {
        (Some(column), Some(mret), Some(mprices)) => {
            Some(market_section(config, column, &before, &mret[..n], mprices, exec)?)
        }
        _ => None,
    };

    Ok(ComparisonReport {
        schema: SCHEMA_VERSION.into(),
        config: config.clone(),
        metadata: Metadata {
            software_version: env!("CARGO_PKG_VERSION").into(),
            assets,
            first_date: panel.dates()[0],
            event_date: config.event_date,
            last_date: *panel.dates().last().expect("non-empty panel"),
            n_before: before.nobs(),
            n_during: during.nobs(),
            dropped_rows: data.dropped_rows,
            seed: config.seed,
        },
        weights: schemes
            .iter()
            .map(|p| SchemeWeights { scheme: p.scheme(), weights: p.weights().to_vec() })
            .collect(),
        markowitz: MarkowitzInfo {
            target_mu: target,
            variance: solution.variance,
            return_constraint_dropped: solution.return_constraint_dropped,
            active_set_iterations: solution.active_set_iterations,
            kkt_residual: solution.kkt_residual,
            shrinkage_weight: posterior.as_ref().map(|p| p.shrinkage_weight()),
        },
        rows,
        risk_contributions,
        market,
    })
}

fn market_section<E: Executor>(
    config: &ExperimentConfig,
    column: &str,
    before: &ReturnPanel,
    market_before: &[f64],
    market_prices: &PriceSeries,
    exec: &E,
) -> Result<MarketSection> {
    let efficiency = efficiency_battery(market_prices, config.max_lag)?;
    let premia = risk_premium(before, config.risk_free_rate, config.periods_per_year)?;
    let per_period = config.risk_free_rate / config.periods_per_year as f64;
    let excess: Vec<f64> = market_before.iter().map(|r| r - per_period).collect();
    let design = FactorDesign::single_factor(&excess, column, config.risk_free_rate)?;
    let fit = fit_capm(&design, &premia)?;
    let boot = if config.bootstrap_b > 0 {
        let spec = BootstrapSpec::new(config.bootstrap_b, config.seed, BootstrapScheme::Paired);
        Some(paired_bootstrap_capm_with(exec, &design, &premia, spec)?)
    } else {
        None
    };
    let capm = premia
        .assets()
        .iter()
        .enumerate()
        .map(|(j, a)| {
            let se = |label: &str| {
                boot.as_ref()
                    .and_then(|b| b.get(&format!("{a}.{label}")).or_else(|| b.get(label)))
                    .map(|s| s.std_error)
            };
            AssetBeta {
                asset: a.clone(),
                alpha: fit.alpha(j),
                beta: fit.beta(j),
                se_alpha: fit.standard_errors[(0, j)],
                se_beta: fit.standard_errors[(1, j)],
                bootstrap_se_alpha: se("alpha"),
                bootstrap_se_beta: se("beta"),
            }
        })
        .collect();
    Ok(MarketSection { column: column.into(), efficiency, capm })
}
