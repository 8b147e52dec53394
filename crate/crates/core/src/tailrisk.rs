//! Empirical Value-at-Risk and Expected Shortfall.
//!
//! Both are reported in return units, so losses are negative numbers. The
//! quantile is the lower order statistic r_(⌈αn⌉) with no interpolation.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::stats::{ceil_rank, sorted};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailRiskReport {
    pub alpha: f64,
    pub var_alpha: f64,
    pub es_alpha: f64,
    /// Observations at or below the VaR quantile.
    pub n_tail: usize,
}

fn check(returns: &[f64], alpha: f64) -> Result<()> {
    if returns.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(alloc::format!("alpha must lie in (0,1), got {alpha}")));
    }
    if returns.iter().any(|r| r.is_nan()) {
        return Err(Error::InvalidInput("NaN return".into()));
    }
    Ok(())
}

fn report_sorted(s: &[f64], alpha: f64) -> TailRiskReport {
    let var_alpha = s[ceil_rank(alpha, s.len()) - 1];
    // ties with the quantile belong to the tail
    let n_tail = s.partition_point(|r| *r <= var_alpha);
    let es_alpha = s[..n_tail].iter().sum::<f64>() / n_tail as f64;
    TailRiskReport { alpha, var_alpha, es_alpha: es_alpha.min(var_alpha), n_tail }
}

/// The α-quantile of the empirical return distribution.
pub fn empirical_var(returns: &[f64], alpha: f64) -> Result<f64> {
    Ok(tail_risk(returns, alpha)?.var_alpha)
}

/// Mean of the returns at or below [`empirical_var`].
pub fn empirical_es(returns: &[f64], alpha: f64) -> Result<f64> {
    Ok(tail_risk(returns, alpha)?.es_alpha)
}

pub fn tail_risk(returns: &[f64], alpha: f64) -> Result<TailRiskReport> {
    check(returns, alpha)?;
    Ok(report_sorted(&sorted(returns), alpha))
}

/// One report per level, sorting the sample once.
pub fn tail_risk_levels(returns: &[f64], levels: &[f64]) -> Result<Vec<TailRiskReport>> {
    for &a in levels {
        check(returns, a)?;
    }
    if returns.is_empty() {
        return Err(Error::EmptyInput);
    }
    let s = sorted(returns);
    Ok(levels.iter().map(|&a| report_sorted(&s, a)).collect())
}
