use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use riskpipe::compare::run_comparison;
use riskpipe::config::RawConfig;
use riskpipe::error::{PipelineError, Result};
use riskpipe::ingest::{ingest, read_weights_path, weights_for, write_panel_csv};
use riskpipe::report::{emit, render_comparison, render_value, Format};
use riskpipe::Parallel;
use riskpipe_core::bootstrap::{paired_bootstrap_capm_with, residual_bootstrap_capm_with, BootstrapScheme, BootstrapSpec};
use riskpipe_core::capm::{fit_capm, risk_premium, FactorDesign};
use riskpipe_core::covariance::{build_posterior, posterior_mode, sample_covariance};
use riskpipe_core::efficiency::efficiency_battery_at;
use riskpipe_core::portfolio::{
    bayes_mc_risk_with, equal_weight, markowitz_optimize, portfolio_volatility, risk_decomposition, Portfolio,
    WeightScheme,
};
use riskpipe_core::pricing::{simulate_gbm_with, summarize_terminal, GbmParams, Measure};
use riskpipe_core::tailrisk::tail_risk_levels;
use riskpipe_core::timeseries::ReturnPanel;
use serde::Serialize;

/// Equity risk pipeline: market-efficiency tests, CAPM, Bayesian portfolio
/// risk, tail risk and GBM simulation.
#[derive(Parser)]
#[command(name = "riskpipe", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads for Monte Carlo sections; results do not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Load a price CSV, align dates and report the return panel.
    Ingest {
        #[arg(long)]
        prices: PathBuf,
        /// Comma-separated columns (default: all).
        #[arg(long, value_delimiter = ',')]
        assets: Vec<String>,
        /// Also write the log-return panel as CSV.
        #[arg(long)]
        returns_csv: Option<PathBuf>,
    },
    /// ADF, Ljung-Box and normality battery on one price column.
    EfficiencyTest {
        #[arg(long)]
        prices: PathBuf,
        #[arg(long)]
        column: String,
        #[arg(long, default_value_t = 10)]
        max_lag: usize,
        #[arg(long, default_value_t = 0.05)]
        level: f64,
    },
    /// CAPM fit of asset risk premia on the market risk premium.
    Capm {
        #[arg(long)]
        prices: PathBuf,
        #[arg(long)]
        market: String,
        #[arg(long, value_delimiter = ',', required = true)]
        assets: Vec<String>,
        /// Annual risk-free rate.
        #[arg(long, default_value_t = 0.0)]
        rf: f64,
        #[arg(long, default_value_t = 252)]
        periods: u32,
        #[arg(long, value_enum)]
        bootstrap: Option<Resampling>,
        /// Bootstrap replications.
        #[arg(long = "B", default_value_t = 1000)]
        replications: usize,
        #[command(flatten)]
        window: Window,
    },
    /// Mean-variance weights from historical returns.
    Optimize {
        #[arg(long)]
        prices: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        assets: Vec<String>,
        /// Per-period target return (default: mean of the asset means).
        #[arg(long)]
        target: Option<f64>,
        #[arg(long)]
        allow_short: bool,
        #[arg(long, value_enum, default_value_t = CovMode::Bayes)]
        covariance: CovMode,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[command(flatten)]
        window: Window,
    },
    /// Volatility, risk contributions, VaR and ES of a fixed portfolio.
    RiskReport {
        #[arg(long)]
        prices: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        assets: Vec<String>,
        /// `asset,weight` CSV (default: equal weights).
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "0.05")]
        var_levels: Vec<f64>,
        #[arg(long, value_enum, default_value_t = CovMode::Sample)]
        covariance: CovMode,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        /// Posterior draws when --covariance bayes.
        #[arg(long, default_value_t = 1000)]
        draws: usize,
        #[arg(long, default_value_t = 252)]
        periods: u32,
        #[command(flatten)]
        window: Window,
    },
    /// Before/during event comparison of cap, equal and Markowitz portfolios.
    Compare {
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. --set covariance=sample.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Terminal prices of geometric Brownian motion.
    SimulateGbm {
        #[arg(long)]
        p0: f64,
        #[arg(long, default_value_t = 0.0)]
        mu: f64,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 10_000)]
        paths: usize,
        /// Simulate under the risk-neutral measure with drift --rate.
        #[arg(long)]
        risk_neutral: bool,
        #[arg(long, default_value_t = 0.0)]
        rate: f64,
        /// Write every terminal price to this CSV.
        #[arg(long)]
        paths_csv: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Window {
    /// First return date to use (inclusive).
    #[arg(long)]
    start: Option<NaiveDate>,
    /// Last return date to use (inclusive).
    #[arg(long)]
    end: Option<NaiveDate>,
}

impl Window {
    fn apply(&self, panel: &ReturnPanel) -> ReturnPanel {
        panel.date_range(self.start, self.end)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Resampling {
    Paired,
    Residual,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum CovMode {
    Sample,
    Bayes,
}

const DEFAULT_SEED: u64 = 42;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn out<T: Serialize>(common: &Common, value: &T) -> Result<()> {
    emit(&render_value(value, common.format)?, common.output.as_deref())
}

#[derive(Serialize)]
struct IngestSummary {
    assets: Vec<String>,
    first_date: NaiveDate,
    last_date: NaiveDate,
    price_rows: usize,
    return_rows: usize,
    dropped_rows: usize,
    dropped_dates: Vec<NaiveDate>,
}

#[derive(Serialize)]
struct CapmRow {
    asset: String,
    alpha: f64,
    beta: f64,
    se_alpha: f64,
    se_beta: f64,
    t_alpha: f64,
    t_beta: f64,
    r_squared: f64,
    residual_variance: f64,
}

#[derive(Serialize)]
struct CapmOutput {
    nobs: usize,
    risk_free_rate: f64,
    fits: Vec<CapmRow>,
    bootstrap: Option<riskpipe_core::bootstrap::BootstrapSummary>,
}

#[derive(Serialize)]
struct OptimizeOutput {
    nobs: usize,
    mean_returns: Vec<f64>,
    covariance: &'static str,
    solution: riskpipe_core::portfolio::MarkowitzSolution,
}

#[derive(Serialize)]
struct RiskOutput {
    nobs: usize,
    assets: Vec<String>,
    weights: Vec<f64>,
    volatility: f64,
    volatility_annualized: f64,
    decomposition: riskpipe_core::portfolio::RiskDecomposition,
    tail: Vec<riskpipe_core::tailrisk::TailRiskReport>,
}

#[derive(Serialize)]
struct GbmOutput {
    params: GbmParams,
    t: f64,
    seed: u64,
    summary: riskpipe_core::pricing::GbmSummary,
    /// Mean of P_t·e^{−rt}; equals P₀ up to Monte Carlo error under the
    /// risk-neutral measure.
    discounted_mean: Option<f64>,
}

fn run(cli: Cli) -> Result<()> {
    let common = &cli.common;
    let seed = common.seed.unwrap_or(DEFAULT_SEED);
    let exec = Parallel::new(common.workers);
    match cli.command {
        Command::Ingest { prices, assets, returns_csv } => {
            let ing = ingest(&prices, &assets)?;
            if let Some(path) = returns_csv {
                let f = std::fs::File::create(&path).map_err(|e| PipelineError::io(&path, e))?;
                write_panel_csv(&ing.panel, f)?;
            }
            out(
                common,
                &IngestSummary {
                    assets: ing.table.assets.clone(),
                    first_date: ing.table.dates[0],
                    last_date: *ing.table.dates.last().expect("aligned rows"),
                    price_rows: ing.table.dates.len(),
                    return_rows: ing.panel.nobs(),
                    dropped_rows: ing.dropped_rows(),
                    dropped_dates: ing.dropped_dates.clone(),
                },
            )
        }
        Command::EfficiencyTest { prices, column, max_lag, level } => {
            let file = riskpipe::ingest::read_prices_path(&prices)?;
            out(common, &efficiency_battery_at(&file.series(&column)?, max_lag, level)?)
        }
        Command::Capm { prices, market, assets, rf, periods, bootstrap, replications, window } => {
            let mut cols = assets.clone();
            cols.push(market.clone());
            let panel = window.apply(&ingest(&prices, &cols)?.panel);
            let premia = risk_premium(&panel, rf, periods)?;
            let names: Vec<&str> = assets.iter().map(String::as_str).collect();
            let responses = premia.select_assets(&names)?;
            let design = FactorDesign::from_panel(&premia, &market)?;
            let fit = fit_capm(&design, &responses)?;
            let boot = match bootstrap {
                None => None,
                Some(kind) => {
                    let scheme = match kind {
                        Resampling::Paired => BootstrapScheme::Paired,
                        Resampling::Residual => BootstrapScheme::Residual,
                    };
                    let spec = BootstrapSpec::new(replications, seed, scheme);
                    let summary = match kind {
                        Resampling::Paired => paired_bootstrap_capm_with(&exec, &design, &responses, spec)?,
                        Resampling::Residual => residual_bootstrap_capm_with(&exec, &design, &responses, spec)?,
                    };
                    Some(summary.discard_replicates())
                }
            };
            let fits = assets
                .iter()
                .enumerate()
                .map(|(j, a)| CapmRow {
                    asset: a.clone(),
                    alpha: fit.alpha(j),
                    beta: fit.beta(j),
                    se_alpha: fit.standard_errors[(0, j)],
                    se_beta: fit.standard_errors[(1, j)],
                    t_alpha: fit.t_value(0, j),
                    t_beta: fit.t_value(1, j),
                    r_squared: fit.r_squared[j],
                    residual_variance: fit.residual_variances[j],
                })
                .collect();
            out(common, &CapmOutput { nobs: fit.nobs, risk_free_rate: rf, fits, bootstrap: boot })
        }
        Command::Optimize { prices, assets, target, allow_short, covariance, c, window } => {
            let panel = window.apply(&ingest(&prices, &assets)?.panel);
            let n = panel.nobs();
            let mu: Vec<f64> = (0..panel.nassets())
                .map(|j| panel.column(j).iter().sum::<f64>() / n as f64)
                .collect();
            let sample = sample_covariance(&panel)?;
            let cov = match covariance {
                CovMode::Sample => sample,
                CovMode::Bayes => posterior_mode(&build_posterior(&sample, n, None, c)?)?,
            };
            let target = target.unwrap_or_else(|| mu.iter().sum::<f64>() / mu.len() as f64);
            let solution = markowitz_optimize(panel.assets(), &mu, &cov, target, !allow_short)?;
            let covariance = if covariance == CovMode::Sample { "sample" } else { "bayes" };
            out(common, &OptimizeOutput { nobs: n, mean_returns: mu, covariance, solution })
        }
        Command::RiskReport { prices, assets, weights, var_levels, covariance, c, draws, periods, window } => {
            let panel = window.apply(&ingest(&prices, &assets)?.panel);
            let port = match weights {
                Some(path) => {
                    let raw = weights_for(panel.assets(), &read_weights_path(&path)?)?;
                    Portfolio::new(panel.assets().to_vec(), raw, WeightScheme::Custom)?
                }
                None => equal_weight(panel.assets())?,
            };
            let sample = sample_covariance(&panel)?;
            let volatility = portfolio_volatility(&port, &sample)?;
            let decomposition = match covariance {
                CovMode::Sample => risk_decomposition(&port, &sample)?,
                CovMode::Bayes => {
                    let post = build_posterior(&sample, panel.nobs(), None, c)?;
                    bayes_mc_risk_with(&exec, &port, &post, draws, seed)?
                }
            };
            let returns = panel.portfolio_returns(port.weights())?;
            out(
                common,
                &RiskOutput {
                    nobs: panel.nobs(),
                    assets: panel.assets().to_vec(),
                    weights: port.weights().to_vec(),
                    volatility,
                    volatility_annualized: volatility * (periods as f64).sqrt(),
                    decomposition,
                    tail: tail_risk_levels(&returns.values, &var_levels)?,
                },
            )
        }
        Command::Compare { config, overrides } => {
            let mut raw = RawConfig::from_path(&config)?;
            for o in &overrides {
                raw.set_pair(o)?;
            }
            if let Some(s) = common.seed {
                raw.set("seed", &s.to_string())?;
            }
            let cfg = raw.resolve()?;
            let report = run_comparison(&cfg, &exec)?;
            emit(&render_comparison(&report, common.format)?, common.output.as_deref())
        }
        Command::SimulateGbm { p0, mu, sigma, t, paths, risk_neutral, rate, paths_csv } => {
            let measure = if risk_neutral { Measure::RiskNeutral { rate } } else { Measure::RealWorld };
            let params = GbmParams { p0, mu, sigma, measure };
            let terminal = simulate_gbm_with(&exec, &params, t, paths, seed)?;
            if let Some(path) = paths_csv {
                write_terminal(&path, &terminal)?;
            }
            let discounted_mean = risk_neutral.then(|| {
                let df = (-rate * t).exp();
                terminal.iter().map(|p| p * df).sum::<f64>() / terminal.len() as f64
            });
            out(
                common,
                &GbmOutput { params, t, seed, summary: summarize_terminal(&terminal), discounted_mean },
            )
        }
    }
}

fn write_terminal(path: &Path, terminal: &[f64]) -> Result<()> {
    let mut text = String::from("path,terminal_price\n");
    for (i, p) in terminal.iter().enumerate() {
        text.push_str(&format!("{i},{p}\n"));
    }
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}
