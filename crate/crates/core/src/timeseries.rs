//! Return algebra: net, gross and log returns, multi-period aggregation,
//! compounding and horizon scaling of volatility.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Dated sequence of strictly positive prices for one asset.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl PriceSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::ShapeError("dates and prices differ in length".into()));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("dates must be strictly increasing".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::DomainError(alloc::format!("non-positive price {bad}")));
        }
        Ok(PriceSeries { dates, values })
    }

    /// Prices on consecutive calendar days starting 2000-01-01; for synthetic
    /// data where dates carry no meaning.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let dates = synthetic_dates(values.len());
        PriceSeries::new(dates, values)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn log_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| libm::log(*v)).collect()
    }
}

pub(crate) fn synthetic_dates(n: usize) -> Vec<NaiveDate> {
    let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
    start.iter_days().take(n).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum ReturnKind {
    Net,
    Log,
}

/// One-period returns dated at the later endpoint of each holding period.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    pub dates: Vec<NaiveDate>,
    pub values: Vec<f64>,
    pub kind: ReturnKind,
}

impl ReturnSeries {
    /// Log-returns with synthetic dates, for simulated data.
    pub fn from_log_returns(values: Vec<f64>) -> Self {
        ReturnSeries { dates: synthetic_dates(values.len()), values, kind: ReturnKind::Log }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn require_window(series: &PriceSeries) -> Result<()> {
    if series.len() < 2 {
        return Err(Error::EmptyWindow { needed: 2, got: series.len() });
    }
    Ok(())
}

/// R_t = P_t / P_{t−1} − 1.
pub fn net_return(series: &PriceSeries) -> Result<ReturnSeries> {
    require_window(series)?;
    let values = series.values.windows(2).map(|w| w[1] / w[0] - 1.0).collect();
    Ok(ReturnSeries { dates: series.dates[1..].to_vec(), values, kind: ReturnKind::Net })
}

/// r_t = log P_t − log P_{t−1}.
pub fn log_return(series: &PriceSeries) -> Result<ReturnSeries> {
    require_window(series)?;
    if series.values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::DomainError("log-return of a non-positive price".into()));
    }
    let values = series
        .values
        .windows(2)
        .map(|w| libm::log(w[1]) - libm::log(w[0]))
        .collect();
    Ok(ReturnSeries { dates: series.dates[1..].to_vec(), values, kind: ReturnKind::Log })
}

/// Gross return 1 + R_t(k) = P_t / P_{t−k} over the last `k` periods.
pub fn gross_return_k(series: &PriceSeries, k: usize) -> Result<f64> {
    gross_return_k_at(series, series.len().saturating_sub(1), k)
}

/// Gross return over the `k` periods ending at index `t`.
pub fn gross_return_k_at(series: &PriceSeries, t: usize, k: usize) -> Result<f64> {
    if k == 0 || k > t || t >= series.len() {
        return Err(Error::IndexError { index: k, max: t.min(series.len().saturating_sub(1)) });
    }
    Ok(series.values[t] / series.values[t - k])
}

/// √k·σ₁.
pub fn horizon_volatility(sigma_1: f64, k: u32) -> f64 {
    libm::sqrt(k as f64) * sigma_1
}

/// value·(1 + rate/m)^(m·years).
pub fn compound(value: f64, rate: f64, m: u64, years: f64) -> f64 {
    let m = m as f64;
    value * libm::exp(m * years * libm::log1p(rate / m))
}

/// Continuous compounding, the m → ∞ limit of [`compound`].
pub fn compound_continuous(value: f64, rate: f64, years: f64) -> f64 {
    value * libm::exp(rate * years)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum PanelKind {
    LogReturn,
    RiskPremium,
}

/// n×P matrix of returns with date index and unique asset labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnPanel {
    dates: Vec<NaiveDate>,
    assets: Vec<String>,
    data: Matrix,
    kind: PanelKind,
}

impl ReturnPanel {
    pub fn new(dates: Vec<NaiveDate>, assets: Vec<String>, data: Matrix, kind: PanelKind) -> Result<Self> {
        if data.rows() != dates.len() || data.cols() != assets.len() {
            return Err(Error::ShapeError(alloc::format!(
                "{}x{} matrix with {} dates and {} assets",
                data.rows(),
                data.cols(),
                dates.len(),
                assets.len()
            )));
        }
        let mut seen = BTreeMap::new();
        for a in &assets {
            if seen.insert(a.as_str(), ()).is_some() {
                return Err(Error::InvalidInput(alloc::format!("duplicate asset label {a}")));
            }
        }
        if data.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("panel contains non-finite cells".into()));
        }
        Ok(ReturnPanel { dates, assets, data, kind })
    }

    /// Panel with synthetic dates and labels `A0, A1, ...`.
    pub fn from_matrix(data: Matrix, kind: PanelKind) -> Self {
        let assets = (0..data.cols()).map(|j| alloc::format!("A{j}")).collect();
        ReturnPanel { dates: synthetic_dates(data.rows()), assets, data, kind }
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn assets(&self) -> &[String] {
        &self.assets
    }

    pub fn matrix(&self) -> &Matrix {
        &self.data
    }

    pub fn kind(&self) -> PanelKind {
        self.kind
    }

    pub fn nobs(&self) -> usize {
        self.data.rows()
    }

    pub fn nassets(&self) -> usize {
        self.data.cols()
    }

    pub fn asset_index(&self, label: &str) -> Option<usize> {
        self.assets.iter().position(|a| a == label)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.data.column(j)
    }

    /// Sub-panel restricted to the named assets, in the given order.
    pub fn select_assets(&self, labels: &[&str]) -> Result<ReturnPanel> {
        let idx = labels
            .iter()
            .map(|l| {
                self.asset_index(l)
                    .ok_or_else(|| Error::InvalidInput(alloc::format!("unknown asset {l}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let data = Matrix::from_fn(self.nobs(), idx.len(), |i, j| self.data[(i, idx[j])]);
        ReturnPanel::new(
            self.dates.clone(),
            idx.iter().map(|&j| self.assets[j].clone()).collect(),
            data,
            self.kind,
        )
    }

    pub fn select_rows(&self, rows: core::ops::Range<usize>) -> ReturnPanel {
        let idx: Vec<usize> = rows.clone().collect();
        ReturnPanel {
            dates: self.dates[rows].to_vec(),
            assets: self.assets.clone(),
            data: self.data.select_rows(&idx),
            kind: self.kind,
        }
    }

    /// Splits into rows dated strictly before `event` and rows on or after it.
    pub fn split_at(&self, event: NaiveDate) -> (ReturnPanel, ReturnPanel) {
        let cut = self.dates.partition_point(|d| *d < event);
        (self.select_rows(0..cut), self.select_rows(cut..self.nobs()))
    }

    /// Rows with `start <= date <= end`.
    pub fn date_range(&self, start: Option<NaiveDate>, end: Option<NaiveDate>) -> ReturnPanel {
        let lo = start.map_or(0, |s| self.dates.partition_point(|d| *d < s));
        let hi = end.map_or(self.nobs(), |e| self.dates.partition_point(|d| *d <= e));
        self.select_rows(lo..hi.max(lo))
    }

    /// Portfolio return series r·ω.
    pub fn portfolio_returns(&self, weights: &[f64]) -> Result<ReturnSeries> {
        let values = self.data.matvec(weights)?;
        Ok(ReturnSeries {
            dates: self.dates.clone(),
            values,
            kind: ReturnKind::Log,
        })
    }

    pub(crate) fn with_data(&self, data: Matrix, kind: PanelKind) -> ReturnPanel {
        ReturnPanel { dates: self.dates.clone(), assets: self.assets.clone(), data, kind }
    }
}

/// Prices of several assets on a common date index.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceTable {
    pub dates: Vec<NaiveDate>,
    pub assets: Vec<String>,
    /// n×P, one column per asset.
    pub prices: Matrix,
}

/// Outcome of aligning several price series on their common dates.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub table: PriceTable,
    /// Dates present in at least one series but dropped because some series
    /// lacked them.
    pub dropped_dates: Vec<NaiveDate>,
}

/// Keeps only dates present in every series.
pub fn align(series: &[(String, PriceSeries)]) -> Result<Alignment> {
    if series.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut counts: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    for (_, s) in series {
        for d in s.dates() {
            *counts.entry(*d).or_default() += 1;
        }
    }
    let (kept, dropped): (Vec<_>, Vec<_>) = counts.into_iter().partition(|(_, c)| *c == series.len());
    let dates: Vec<NaiveDate> = kept.into_iter().map(|(d, _)| d).collect();
    let mut prices = Matrix::zeros(dates.len(), series.len());
    for (j, (_, s)) in series.iter().enumerate() {
        let mut cursor = 0;
        for (i, d) in dates.iter().enumerate() {
            while s.dates()[cursor] < *d {
                cursor += 1;
            }
            prices[(i, j)] = s.values()[cursor];
        }
    }
    Ok(Alignment {
        table: PriceTable {
            dates,
            assets: series.iter().map(|(a, _)| a.clone()).collect(),
            prices,
        },
        dropped_dates: dropped.into_iter().map(|(d, _)| d).collect(),
    })
}

impl PriceTable {
    pub fn series(&self, asset: &str) -> Result<PriceSeries> {
        let j = self
            .assets
            .iter()
            .position(|a| a == asset)
            .ok_or_else(|| Error::InvalidInput(alloc::format!("unknown asset {asset}")))?;
        PriceSeries::new(self.dates.clone(), self.prices.column(j))
    }

    /// Log-return panel; the first date has no return and is omitted.
    pub fn log_return_panel(&self) -> Result<ReturnPanel> {
        let n = self.dates.len();
        if n < 2 {
            return Err(Error::EmptyWindow { needed: 2, got: n });
        }
        if self.prices.as_slice().iter().any(|v| !(*v > 0.0)) {
            return Err(Error::DomainError("log-return of a non-positive price".into()));
        }
        let data = Matrix::from_fn(n - 1, self.assets.len(), |i, j| {
            libm::log(self.prices[(i + 1, j)]) - libm::log(self.prices[(i, j)])
        });
        ReturnPanel::new(self.dates[1..].to_vec(), self.assets.clone(), data, PanelKind::LogReturn)
    }
}
