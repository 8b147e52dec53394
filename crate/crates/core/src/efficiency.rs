//! Market-efficiency test battery: augmented Dickey-Fuller unit-root test,
//! Ljung-Box portmanteau test, Shapiro-Wilk normality test (with a
//! Jarque-Bera fallback for long series) and the four-step verdict.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{LeastSquares, Matrix};
use crate::special::{chi_square_sf, normal_quantile, normal_sf};
use crate::stats::{autocorrelations, mean, sorted};
use crate::timeseries::{log_return, PriceSeries};

/// Significance levels at which every result records a decision.
pub const DECISION_LEVELS: [f64; 3] = [0.01, 0.05, 0.10];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum TestKind {
    AugmentedDickeyFuller,
    LjungBox,
    ShapiroWilk,
    JarqueBera,
}

impl TestKind {
    pub fn null_hypothesis(self) -> &'static str {
        match self {
            TestKind::AugmentedDickeyFuller => "unit root (random walk)",
            TestKind::LjungBox => "no autocorrelation up to the tested lag",
            TestKind::ShapiroWilk | TestKind::JarqueBera => "gaussian distribution",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Decision {
    pub level: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TestResult {
    pub test: TestKind,
    pub statistic: f64,
    pub p_value: f64,
    pub lags_used: usize,
    pub nobs: usize,
    pub null_hypothesis: String,
    /// Set when the p-value hit the edge of the tabulated range.
    pub p_value_clamped: bool,
    pub decisions: Vec<Decision>,
}

impl TestResult {
    fn new(test: TestKind, statistic: f64, p_value: f64, lags_used: usize, nobs: usize, clamped: bool) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        TestResult {
            test,
            statistic,
            p_value,
            lags_used,
            nobs,
            null_hypothesis: test.null_hypothesis().into(),
            p_value_clamped: clamped,
            decisions: DECISION_LEVELS
                .iter()
                .map(|&level| Decision { level, reject: p_value <= level })
                .collect(),
        }
    }

    pub fn rejects_at(&self, level: f64) -> bool {
        self.p_value <= level
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LagOrder {
    /// ⌊(n − 1)^{1/3}⌋ for a series of n observations.
    Auto,
    Fixed(usize),
}

impl LagOrder {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            LagOrder::Fixed(k) => k,
            LagOrder::Auto => {
                let mut k = libm::cbrt((n as f64) - 1.0) as usize;
                // guard cbrt rounding just below an exact cube
                while ((k + 1) * (k + 1) * (k + 1)) as f64 <= n as f64 - 1.0 {
                    k += 1;
                }
                k
            }
        }
    }
}

pub const ADF_MIN_OBS: usize = 25;

// Dickey-Fuller critical values for the constant-plus-trend regression.
// Rows: sample sizes; columns: lower-tail probabilities.
const ADF_SIZES: [f64; 6] = [25.0, 50.0, 100.0, 250.0, 500.0, 100_000.0];
const ADF_PROBS: [f64; 8] = [0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99];
const ADF_CRITICAL: [[f64; 8]; 6] = [
    [-4.38, -3.95, -3.60, -3.24, -1.14, -0.80, -0.50, -0.15],
    [-4.15, -3.80, -3.50, -3.18, -1.19, -0.87, -0.58, -0.24],
    [-4.04, -3.73, -3.45, -3.15, -1.22, -0.90, -0.62, -0.28],
    [-3.99, -3.69, -3.43, -3.13, -1.23, -0.92, -0.64, -0.31],
    [-3.98, -3.68, -3.42, -3.13, -1.24, -0.93, -0.65, -0.32],
    [-3.96, -3.66, -3.41, -3.12, -1.25, -0.94, -0.66, -0.33],
];

/// Piecewise-linear interpolation with constant extrapolation; `xs` ascending.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> (f64, bool) {
    let last = xs.len() - 1;
    if x <= xs[0] {
        return (ys[0], x < xs[0]);
    }
    if x >= xs[last] {
        return (ys[last], x > xs[last]);
    }
    let i = xs.partition_point(|v| *v <= x) - 1;
    let w = (x - xs[i]) / (xs[i + 1] - xs[i]);
    (ys[i] + w * (ys[i + 1] - ys[i]), false)
}

/// p-value of a Dickey-Fuller trend-case statistic for `n` differenced
/// observations. The flag reports clamping to [0.01, 0.99].
pub fn adf_p_value(statistic: f64, n: usize) -> (f64, bool) {
    let critical: Vec<f64> = (0..ADF_PROBS.len())
        .map(|j| {
            let col: Vec<f64> = ADF_CRITICAL.iter().map(|row| row[j]).collect();
            interpolate(&ADF_SIZES, &col, n as f64).0
        })
        .collect();
    interpolate(&critical, &ADF_PROBS, statistic)
}

/// Augmented Dickey-Fuller test with constant and linear trend.
///
/// Regresses Δy_t on (1, y_{t−1}, t, Δy_{t−1}, …, Δy_{t−k}) and reports the
/// t-ratio on y_{t−1}.
pub fn adf_test(series: &[f64], lags: LagOrder) -> Result<TestResult> {
    let n = series.len();
    if n < ADF_MIN_OBS {
        return Err(Error::InsufficientData { needed: ADF_MIN_OBS, got: n });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in series".into()));
    }
    if series.iter().all(|v| *v == series[0]) {
        return Err(Error::DegenerateInput("constant series".into()));
    }
    let k = lags.resolve(n);
    let diffs: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let m = diffs.len();
    let ncoef = 3 + k;
    if m <= k + ncoef {
        return Err(Error::InsufficientData { needed: 2 * ncoef + 1, got: n });
    }
    let rows = m - k;
    let mut design = Matrix::zeros(rows, ncoef);
    let mut response = vec![0.0; rows];
    for (r, t) in (k..m).enumerate() {
        response[r] = diffs[t];
        let row = design.row_mut(r);
        row[0] = 1.0;
        row[1] = series[t];
        row[2] = (t + 1) as f64;
        for j in 1..=k {
            row[2 + j] = diffs[t - j];
        }
    }
    let ls = LeastSquares::new(&design)
        .map_err(|_| Error::DegenerateInput("collinear ADF regression".into()))?;
    let beta = ls.solve(&response)?;
    let fitted = design.matvec(&beta)?;
    let rss: f64 = response.iter().zip(&fitted).map(|(y, f)| (y - f) * (y - f)).sum();
    let sigma2 = rss / (rows - ncoef) as f64;
    let se = libm::sqrt(sigma2 * ls.xtx_inverse()[(1, 1)]);
    if !(se > 0.0) {
        return Err(Error::DegenerateInput("zero residual variance in ADF regression".into()));
    }
    let stat = beta[1] / se;
    let (p, clamped) = adf_p_value(stat, m);
    Ok(TestResult::new(TestKind::AugmentedDickeyFuller, stat, p, k, n, clamped))
}

/// Ljung-Box Q = n(n+2) Σ_{h=1}^{H} ρ̂_h²/(n−h), referred to χ²_H.
pub fn ljung_box(series: &[f64], max_lag: usize) -> Result<TestResult> {
    let n = series.len();
    if max_lag == 0 {
        return Err(Error::InvalidInput("Ljung-Box needs at least one lag".into()));
    }
    if n <= max_lag {
        return Err(Error::InsufficientData { needed: max_lag + 1, got: n });
    }
    let rho = autocorrelations(series, max_lag)
        .ok_or_else(|| Error::DegenerateInput("zero-variance series".into()))?;
    let nf = n as f64;
    let q = nf * (nf + 2.0)
        * rho
            .iter()
            .enumerate()
            .map(|(i, r)| r * r / (nf - (i + 1) as f64))
            .sum::<f64>();
    let p = chi_square_sf(q, max_lag as f64);
    Ok(TestResult::new(TestKind::LjungBox, q, p, max_lag, n, false))
}

pub const SHAPIRO_WILK_MIN: usize = 12;
pub const SHAPIRO_WILK_MAX: usize = 5000;

fn poly(coefs: &[f64], x: f64) -> f64 {
    coefs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Shapiro-Wilk coefficients a_1..a_{⌊n/2⌋} (Royston's approximation),
/// applied to x_(n+1−i) − x_(i).
pub fn shapiro_wilk_coefficients(n: usize) -> Vec<f64> {
    const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
    const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
    let half = n / 2;
    let an = n as f64;
    let m: Vec<f64> = (1..=half)
        .map(|i| normal_quantile((i as f64 - 0.375) / (an + 0.25)))
        .collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = libm::sqrt(summ2);
    let rsn = 1.0 / libm::sqrt(an);
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;
    let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
    let fac = libm::sqrt(
        (summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2),
    );
    let mut a = vec![0.0; half];
    a[0] = a1;
    a[1] = a2;
    for i in 2..half {
        a[i] = -m[i] / fac;
    }
    a
}

/// Shapiro-Wilk W with Royston's normalizing transform of ln(1 − W).
pub fn shapiro_wilk(series: &[f64]) -> Result<TestResult> {
    let n = series.len();
    if n < SHAPIRO_WILK_MIN {
        return Err(Error::InsufficientData { needed: SHAPIRO_WILK_MIN, got: n });
    }
    if n > SHAPIRO_WILK_MAX {
        return Err(Error::InvalidInput(alloc::format!(
            "Shapiro-Wilk approximation is valid up to n={SHAPIRO_WILK_MAX}"
        )));
    }
    let x = sorted(series);
    let m = mean(&x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    if !(ss > 0.0) {
        return Err(Error::DegenerateInput("constant series".into()));
    }
    let a = shapiro_wilk_coefficients(n);
    let num: f64 = a.iter().enumerate().map(|(i, ai)| ai * (x[n - 1 - i] - x[i])).sum();
    let w = (num * num / ss).min(1.0);

    const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
    const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
    let ln_n = libm::log(n as f64);
    let mu = poly(&C5, ln_n);
    let sigma = libm::exp(poly(&C6, ln_n));
    let p = if w >= 1.0 { 1.0 } else { normal_sf((libm::log(1.0 - w) - mu) / sigma) };
    Ok(TestResult::new(TestKind::ShapiroWilk, w, p, 0, n, false))
}

/// Jarque-Bera skewness-kurtosis test, referred to χ²₂.
pub fn jarque_bera(series: &[f64]) -> Result<TestResult> {
    let n = series.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let m = mean(series);
    let nf = n as f64;
    let (m2, m3, m4) = series.iter().fold((0.0, 0.0, 0.0), |(a, b, c), v| {
        let d = v - m;
        (a + d * d, b + d * d * d, c + d * d * d * d)
    });
    let (m2, m3, m4) = (m2 / nf, m3 / nf, m4 / nf);
    if !(m2 > 0.0) {
        return Err(Error::DegenerateInput("constant series".into()));
    }
    let skew = m3 / libm::pow(m2, 1.5);
    let kurt = m4 / (m2 * m2);
    let jb = nf / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
    Ok(TestResult::new(TestKind::JarqueBera, jb, chi_square_sf(jb, 2.0), 0, n, false))
}

/// Shapiro-Wilk for 12 ≤ n ≤ 5000, Jarque-Bera beyond; the result's `test`
/// field says which one ran.
pub fn normality_test(series: &[f64]) -> Result<TestResult> {
    if series.len() > SHAPIRO_WILK_MAX {
        jarque_bera(series)
    } else {
        shapiro_wilk(series)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Verdict {
    EfficientConsistent,
    NotEfficient,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EfficiencyVerdict {
    pub level: f64,
    pub prices_nonstationary: bool,
    pub returns_stationary: bool,
    pub returns_uncorrelated: bool,
    pub returns_gaussian: bool,
    pub verdict: Verdict,
    pub price_unit_root: TestResult,
    pub return_unit_root: TestResult,
    pub autocorrelation: TestResult,
    pub normality: TestResult,
}

/// Runs the four questions at the 5% level.
pub fn efficiency_battery(prices: &PriceSeries, max_lag: usize) -> Result<EfficiencyVerdict> {
    efficiency_battery_at(prices, max_lag, 0.05)
}

/// ADF on log-prices, ADF on log-returns, Ljung-Box and normality on
/// log-returns, each judged at `level`.
pub fn efficiency_battery_at(prices: &PriceSeries, max_lag: usize, level: f64) -> Result<EfficiencyVerdict> {
    let log_prices = prices.log_values();
    let returns = log_return(prices)?.values;
    let price_unit_root = adf_test(&log_prices, LagOrder::Auto)?;
    let return_unit_root = adf_test(&returns, LagOrder::Auto)?;
    let autocorrelation = ljung_box(&returns, max_lag)?;
    let normality = normality_test(&returns)?;

    let prices_nonstationary = !price_unit_root.rejects_at(level);
    let returns_stationary = return_unit_root.rejects_at(level);
    let returns_uncorrelated = !autocorrelation.rejects_at(level);
    let returns_gaussian = !normality.rejects_at(level);
    let verdict = if prices_nonstationary && returns_stationary && returns_uncorrelated {
        Verdict::EfficientConsistent
    } else {
        Verdict::NotEfficient
    };
    Ok(EfficiencyVerdict {
        level,
        prices_nonstationary,
        returns_stationary,
        returns_uncorrelated,
        returns_gaussian,
        verdict,
        price_unit_root,
        return_unit_root,
        autocorrelation,
        normality,
    })
}
