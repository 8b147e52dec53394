//! CAPM and k-factor linear models: risk-premium construction, per-asset OLS
//! and the systematic/idiosyncratic covariance decomposition.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::covariance::{CovarianceEstimate, Provenance};
use crate::error::{Error, Result};
use crate::linalg::{LeastSquares, Matrix};
use crate::timeseries::{PanelKind, ReturnPanel};

/// Excess returns: every cell minus `risk_free_annual / periods_per_year`.
pub fn risk_premium(panel: &ReturnPanel, risk_free_annual: f64, periods_per_year: u32) -> Result<ReturnPanel> {
    if panel.kind() != PanelKind::LogReturn {
        return Err(Error::InvalidInput("risk premium needs a log-return panel".into()));
    }
    if periods_per_year == 0 {
        return Err(Error::InvalidInput("periods per year must be positive".into()));
    }
    let rf = risk_free_annual / periods_per_year as f64;
    let m = panel.matrix();
    let data = Matrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] - rf);
    Ok(panel.with_data(data, PanelKind::RiskPremium))
}

/// n×(k+1) design whose first column is the intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorDesign {
    matrix: Matrix,
    factor_labels: Vec<String>,
    /// Per-period risk-free rate already removed from the factors.
    pub risk_free_rate: f64,
}

impl FactorDesign {
    /// Prepends the intercept column to `factors` (n×k).
    pub fn new(factors: &Matrix, factor_labels: Vec<String>, risk_free_rate: f64) -> Result<Self> {
        let (n, k) = (factors.rows(), factors.cols());
        if factor_labels.len() != k {
            return Err(Error::ShapeError("one label per factor".into()));
        }
        if n <= k + 1 {
            return Err(Error::InsufficientData { needed: k + 2, got: n });
        }
        let matrix = Matrix::from_fn(n, k + 1, |i, j| if j == 0 { 1.0 } else { factors[(i, j - 1)] });
        Ok(FactorDesign { matrix, factor_labels, risk_free_rate })
    }

    pub fn single_factor(market: &[f64], label: &str, risk_free_rate: f64) -> Result<Self> {
        let factors = Matrix::from_fn(market.len(), 1, |i, _| market[i]);
        FactorDesign::new(&factors, vec![label.into()], risk_free_rate)
    }

    /// Single-factor design from the `market` column of a risk-premium panel.
    pub fn from_panel(panel: &ReturnPanel, market: &str) -> Result<Self> {
        let j = panel
            .asset_index(market)
            .ok_or_else(|| Error::InvalidInput(alloc::format!("unknown market column {market}")))?;
        FactorDesign::single_factor(&panel.column(j), market, 0.0)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn nobs(&self) -> usize {
        self.matrix.rows()
    }

    /// Number of coefficients k + 1.
    pub fn ncoef(&self) -> usize {
        self.matrix.cols()
    }

    pub fn factor_labels(&self) -> &[String] {
        &self.factor_labels
    }

    /// "alpha", "beta", then the remaining factor labels.
    pub fn coefficient_labels(&self) -> Vec<String> {
        let mut out = vec![String::from("alpha")];
        for (i, l) in self.factor_labels.iter().enumerate() {
            out.push(if i == 0 { String::from("beta") } else { l.clone() });
        }
        out
    }

    /// Slope columns only (n×k).
    pub fn factors(&self) -> Matrix {
        Matrix::from_fn(self.nobs(), self.ncoef() - 1, |i, j| self.matrix[(i, j + 1)])
    }
}

/// Per-asset OLS estimates. Coefficient matrices are (k+1)×P, one column per
/// asset with α in row 0 and β in row 1.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FactorFit {
    pub assets: Vec<String>,
    pub coefficient_labels: Vec<String>,
    pub coefficients: Matrix,
    pub standard_errors: Matrix,
    pub residuals: Matrix,
    pub residual_variances: Vec<f64>,
    pub r_squared: Vec<f64>,
    pub nobs: usize,
}

impl FactorFit {
    pub fn alpha(&self, asset: usize) -> f64 {
        self.coefficients[(0, asset)]
    }

    pub fn beta(&self, asset: usize) -> f64 {
        self.coefficients[(1, asset)]
    }

    pub fn t_value(&self, coef: usize, asset: usize) -> f64 {
        self.coefficients[(coef, asset)] / self.standard_errors[(coef, asset)]
    }

    /// Fitted values X·B (n×P).
    pub fn fitted(&self, design: &FactorDesign) -> Matrix {
        design.matrix().matmul(&self.coefficients).expect("conforming fit")
    }
}

/// OLS of every panel column on the design through one QR factorization.
pub fn fit_capm(design: &FactorDesign, panel: &ReturnPanel) -> Result<FactorFit> {
    let ls = LeastSquares::new(design.matrix())?;
    fit_with(&ls, design, panel.matrix(), panel.assets().to_vec())
}

pub(crate) fn fit_with(
    ls: &LeastSquares,
    design: &FactorDesign,
    responses: &Matrix,
    assets: Vec<String>,
) -> Result<FactorFit> {
    let (n, p) = (responses.rows(), responses.cols());
    if n != design.nobs() {
        return Err(Error::ShapeError(alloc::format!(
            "design has {} rows, panel has {n}",
            design.nobs()
        )));
    }
    let kp1 = design.ncoef();
    if n <= kp1 {
        return Err(Error::InsufficientData { needed: kp1 + 1, got: n });
    }
    let xtx_inv = ls.xtx_inverse();
    let mut coefficients = Matrix::zeros(kp1, p);
    let mut standard_errors = Matrix::zeros(kp1, p);
    let mut residuals = Matrix::zeros(n, p);
    let mut residual_variances = vec![0.0; p];
    let mut r_squared = vec![0.0; p];
    for j in 0..p {
        let y = responses.column(j);
        let beta = ls.solve(&y)?;
        let fitted = design.matrix().matvec(&beta)?;
        let ybar = y.iter().sum::<f64>() / n as f64;
        let mut rss = 0.0;
        let mut tss = 0.0;
        for i in 0..n {
            let e = y[i] - fitted[i];
            residuals[(i, j)] = e;
            rss += e * e;
            tss += (y[i] - ybar) * (y[i] - ybar);
        }
        let s2 = rss / (n - kp1) as f64;
        residual_variances[j] = s2;
        r_squared[j] = if tss > 0.0 { 1.0 - rss / tss } else { 1.0 };
        for c in 0..kp1 {
            coefficients[(c, j)] = beta[c];
            standard_errors[(c, j)] = libm::sqrt(s2 * xtx_inv[(c, c)]);
        }
    }
    Ok(FactorFit {
        assets,
        coefficient_labels: design.coefficient_labels(),
        coefficients,
        standard_errors,
        residuals,
        residual_variances,
        r_squared,
        nobs: n,
    })
}

/// Model-implied covariance split into its two summands.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceDecomposition {
    pub systematic: CovarianceEstimate,
    pub idiosyncratic: CovarianceEstimate,
    pub total: CovarianceEstimate,
}

/// Systematic part B_sᵀ Σ_X B_s (slope rows only) plus diag(σ̂_i²).
pub fn decompose_covariance(fit: &FactorFit, factor_cov: &CovarianceEstimate) -> Result<CovarianceDecomposition> {
    let k = fit.coefficients.rows() - 1;
    let p = fit.coefficients.cols();
    if factor_cov.dim() != k {
        return Err(Error::ShapeError(alloc::format!(
            "factor covariance is {0}x{0}, fit has {k} factors",
            factor_cov.dim()
        )));
    }
    let slopes = Matrix::from_fn(k, p, |i, j| fit.coefficients[(i + 1, j)]);
    let mut systematic = slopes
        .transpose()
        .matmul(factor_cov.matrix())?
        .matmul(&slopes)?;
    systematic.symmetrize();
    let idio = Matrix::from_diagonal(&fit.residual_variances);
    let mut total = systematic.add(&idio)?;
    total.symmetrize();
    Ok(CovarianceDecomposition {
        systematic: CovarianceEstimate::new(systematic, Provenance::FactorModel)?,
        idiosyncratic: CovarianceEstimate::new(idio, Provenance::FactorModel)?,
        total: CovarianceEstimate::new(total, Provenance::FactorModel)?,
    })
}
