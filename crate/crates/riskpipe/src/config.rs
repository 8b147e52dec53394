//! Experiment configuration.
//!
//! The file format is flat `key = value` text. Blank lines and lines
//! starting with `#` are ignored, lists are comma separated, and relative
//! paths resolve against the config file's directory. Keys:
//!
//! | key | value | default |
//! |---|---|---|
//! | `prices` | price CSV path | required |
//! | `weights` | index-cap weights CSV (`asset,weight`) | required |
//! | `assets` | asset columns | required, at least 2 |
//! | `market` | market index column | none |
//! | `event_date` | `YYYY-MM-DD`; returns dated before it form the first segment | required |
//! | `risk_free_rate` | annual rate | 0 |
//! | `periods_per_year` | integer | 252 |
//! | `var_levels` | levels in (0,1) | 0.05 |
//! | `covariance` | `sample` or `bayes` | bayes |
//! | `c` | prior degrees-of-freedom offset, > 0 | 1 |
//! | `target_mu` | per-period Markowitz target | mean of asset means |
//! | `long_only` | `true`/`false` | true |
//! | `seed` | u64 | 42 |
//! | `mc_draws` | posterior draws for risk contributions | 1000 |
//! | `bootstrap_b` | paired-bootstrap replications for CAPM, 0 disables | 0 |
//! | `max_lag` | Ljung-Box lags | 10 |

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{PipelineError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceMode {
    Sample,
    Bayes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub prices: PathBuf,
    pub weights: PathBuf,
    pub assets: Vec<String>,
    pub market: Option<String>,
    pub event_date: NaiveDate,
    pub risk_free_rate: f64,
    pub periods_per_year: u32,
    pub var_levels: Vec<f64>,
    pub covariance: CovarianceMode,
    pub c: f64,
    pub target_mu: Option<f64>,
    pub long_only: bool,
    pub seed: u64,
    pub mc_draws: usize,
    pub bootstrap_b: usize,
    pub max_lag: usize,
}

/// Key-value pairs before validation.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: Vec<(String, String)>,
    base: Option<PathBuf>,
}

fn bad(key: &str, value: &str, why: &str) -> PipelineError {
    PipelineError::Config(format!("{key} = {value}: {why}"))
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value, "not a number"))
}

const KEYS: [&str; 16] = [
    "prices",
    "weights",
    "assets",
    "market",
    "event_date",
    "risk_free_rate",
    "periods_per_year",
    "var_levels",
    "covariance",
    "c",
    "target_mu",
    "long_only",
    "seed",
    "mc_draws",
    "bootstrap_b",
    "max_lag",
];

impl RawConfig {
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Self> {
        let mut raw = RawConfig { entries: Vec::new(), base: base.map(Path::to_path_buf) };
        let mut seen = BTreeSet::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Config(format!("line {}: expected `key = value`", k + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_owned()) {
                return Err(PipelineError::Config(format!("line {}: duplicate key `{key}`", k + 1)));
            }
            raw.set(key, value.trim())?;
        }
        Ok(raw)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        RawConfig::parse(&text, path.parent())
    }

    /// Sets or overrides one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(PipelineError::Config(format!("unknown key `{key}`")));
        }
        self.entries.retain(|(k, _)| k != key);
        self.entries.push((key.to_owned(), value.to_owned()));
        Ok(())
    }

    /// Parses a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| PipelineError::Config(format!("override `{pair}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn required(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| PipelineError::Config(format!("missing required key `{key}`")))
    }

    fn path(&self, key: &str) -> Result<PathBuf> {
        let p = PathBuf::from(self.required(key)?);
        Ok(match &self.base {
            Some(base) if p.is_relative() => base.join(p),
            _ => p,
        })
    }

    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let list = |v: &str| -> Vec<String> {
            v.split(',').map(|s| s.trim().to_owned()).filter(|s| !s.is_empty()).collect()
        };
        let event = self.required("event_date")?;
        let config = ExperimentConfig {
            prices: self.path("prices")?,
            weights: self.path("weights")?,
            assets: list(self.required("assets")?),
            market: self.get("market").filter(|m| !m.is_empty()).map(str::to_owned),
            event_date: NaiveDate::parse_from_str(event, "%Y-%m-%d")
                .map_err(|_| bad("event_date", event, "expected YYYY-MM-DD"))?,
            risk_free_rate: self.get("risk_free_rate").map_or(Ok(0.0), |v| number("risk_free_rate", v))?,
            periods_per_year: self.get("periods_per_year").map_or(Ok(252), |v| number("periods_per_year", v))?,
            var_levels: match self.get("var_levels") {
                None => vec![0.05],
                Some(v) => list(v).iter().map(|x| number("var_levels", x)).collect::<Result<_>>()?,
            },
            covariance: match self.get("covariance").unwrap_or("bayes") {
                "sample" => CovarianceMode::Sample,
                "bayes" => CovarianceMode::Bayes,
                other => return Err(bad("covariance", other, "expected sample or bayes")),
            },
            c: self.get("c").map_or(Ok(1.0), |v| number("c", v))?,
            target_mu: self.get("target_mu").map(|v| number("target_mu", v)).transpose()?,
            long_only: match self.get("long_only").unwrap_or("true") {
                "true" => true,
                "false" => false,
                other => return Err(bad("long_only", other, "expected true or false")),
            },
            seed: self.get("seed").map_or(Ok(42), |v| number("seed", v))?,
            mc_draws: self.get("mc_draws").map_or(Ok(1000), |v| number("mc_draws", v))?,
            bootstrap_b: self.get("bootstrap_b").map_or(Ok(0), |v| number("bootstrap_b", v))?,
            max_lag: self.get("max_lag").map_or(Ok(10), |v| number("max_lag", v))?,
        };
        config.validate()?;
        Ok(config)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(PipelineError::Config(m));
        if self.assets.len() < 2 {
            return fail("at least two assets are required".into());
        }
        let unique: BTreeSet<&String> = self.assets.iter().collect();
        if unique.len() != self.assets.len() {
            return fail("asset list has duplicates".into());
        }
        if self.var_levels.is_empty() || self.var_levels.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return fail("var_levels must lie in (0,1)".into());
        }
        if self.c.is_nan() || self.c <= 0.0 {
            return fail("c must be positive".into());
        }
        if self.periods_per_year == 0 || self.mc_draws == 0 || self.max_lag == 0 {
            return fail("periods_per_year, mc_draws and max_lag must be positive".into());
        }
        if !self.risk_free_rate.is_finite() || self.target_mu.is_some_and(|t| !t.is_finite()) {
            return fail("non-finite rate or target".into());
        }
        Ok(())
    }

    /// The config in file syntax, with absolute or as-given paths.
    pub fn to_text(&self) -> String {
        let join = |v: &[String]| v.join(",");
        let mut lines = vec![
            format!("prices = {}", self.prices.display()),
            format!("weights = {}", self.weights.display()),
            format!("assets = {}", join(&self.assets)),
        ];
        if let Some(m) = &self.market {
            lines.push(format!("market = {m}"));
        }
        lines.push(format!("event_date = {}", self.event_date.format("%Y-%m-%d")));
        lines.push(format!("risk_free_rate = {}", self.risk_free_rate));
        lines.push(format!("periods_per_year = {}", self.periods_per_year));
        lines.push(format!(
            "var_levels = {}",
            self.var_levels.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
        ));
        let cov = match self.covariance {
            CovarianceMode::Sample => "sample",
            CovarianceMode::Bayes => "bayes",
        };
        lines.push(format!("covariance = {cov}"));
        lines.push(format!("c = {}", self.c));
        if let Some(t) = self.target_mu {
            lines.push(format!("target_mu = {t}"));
        }
        lines.push(format!("long_only = {}", self.long_only));
        lines.push(format!("seed = {}", self.seed));
        lines.push(format!("mc_draws = {}", self.mc_draws));
        lines.push(format!("bootstrap_b = {}", self.bootstrap_b));
        lines.push(format!("max_lag = {}", self.max_lag));
        lines.join("\n") + "\n"
    }
}
