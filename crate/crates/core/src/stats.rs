//! Descriptive statistics shared across modules.

use alloc::vec::Vec;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Unbiased (n − 1 divisor) sample variance.
pub fn sample_variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn sample_std(x: &[f64]) -> f64 {
    libm::sqrt(sample_variance(x))
}

/// Biased autocorrelations ρ̂_1..=ρ̂_max_lag (n divisor in both numerator
/// and denominator). `None` when the series has zero variance.
pub fn autocorrelations(x: &[f64], max_lag: usize) -> Option<Vec<f64>> {
    let n = x.len();
    let m = mean(x);
    let centered: Vec<f64> = x.iter().map(|v| v - m).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if c0 == 0.0 || !c0.is_finite() {
        return None;
    }
    Some(
        (1..=max_lag)
            .map(|h| {
                let ch: f64 = (h..n).map(|t| centered[t] * centered[t - h]).sum();
                ch / c0
            })
            .collect(),
    )
}

pub fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// 1-based rank ⌈q·n⌉ clamped to 1..=n. A relative slack of 1e-12 absorbs
/// representation error in products such as 0.07·100.
pub fn ceil_rank(q: f64, n: usize) -> usize {
    let x = q * n as f64;
    let k = libm::ceil(x - x.abs() * 1e-12) as usize;
    k.clamp(1, n.max(1))
}
