//! Covariance estimation for short panels: the sample covariance, the
//! conjugate inverse-Wishart posterior, its mode as a shrinkage estimator,
//! and posterior draws via Bartlett's construction.
//!
//! Parameterization: 𝒲⁻¹(ν, Ψ) has mean Ψ/(ν − P − 1) and mode Ψ/(ν + P + 1).

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{lower_triangular_inverse, psd_rank, Cholesky, Matrix};
use crate::rng::{keyed_rng, KeyedRng};
use crate::timeseries::ReturnPanel;

const SYMMETRY_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Provenance {
    Sample,
    PosteriorMode,
    PosteriorDraw,
    /// B'Σ_X B + Σ_ε from a fitted factor model.
    FactorModel,
}

/// Symmetric P×P covariance matrix tagged with where it came from.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CovarianceEstimate {
    matrix: Matrix,
    provenance: Provenance,
    rank: usize,
}

impl CovarianceEstimate {
    pub fn new(matrix: Matrix, provenance: Provenance) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::ShapeError("covariance must be square".into()));
        }
        if !matrix.is_symmetric(SYMMETRY_TOL) {
            return Err(Error::InvalidInput("covariance must be symmetric".into()));
        }
        let rank = psd_rank(&matrix, RANK_TOL);
        Ok(CovarianceEstimate { matrix, provenance, rank })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn variances(&self) -> Vec<f64> {
        self.matrix.diagonal()
    }

    pub fn is_positive_definite(&self) -> bool {
        Cholesky::new(&self.matrix).is_ok()
    }
}

/// (1/(n−1)) Σ (r_i − r̄)(r_i − r̄)ᵀ.
pub fn sample_covariance(panel: &ReturnPanel) -> Result<CovarianceEstimate> {
    covariance_of_rows(panel.matrix())
}

pub(crate) fn covariance_of_rows(data: &Matrix) -> Result<CovarianceEstimate> {
    let (n, p) = (data.rows(), data.cols());
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let means: Vec<f64> = (0..p)
        .map(|j| (0..n).map(|i| data[(i, j)]).sum::<f64>() / n as f64)
        .collect();
    let mut cov = Matrix::zeros(p, p);
    for i in 0..n {
        let row = data.row(i);
        for a in 0..p {
            let da = row[a] - means[a];
            for b in 0..=a {
                cov[(a, b)] += da * (row[b] - means[b]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for a in 0..p {
        for b in 0..=a {
            let v = cov[(a, b)] / denom;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    CovarianceEstimate::new(cov, Provenance::Sample)
}

/// 𝒲⁻¹(n₀ + n − 1, Ψ + S) posterior of the covariance given the sample
/// scatter.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InverseWishartPosterior {
    pub df: f64,
    pub scale: Matrix,
    pub prior_df: f64,
    pub prior_scale: Matrix,
    /// Observations behind the sample covariance.
    pub nobs: usize,
    /// The sample covariance S/(n−1) the posterior was built from.
    pub sample: Matrix,
}

/// Prior degrees of freedom: (P − n) + c when n < P, else c.
pub fn prior_df(p: usize, n: usize, c: f64) -> f64 {
    p.saturating_sub(n) as f64 + c
}

/// Conjugate update. `prior_scale = None` uses τ·I with τ the average sample
/// variance.
///
/// The "S" in the update is the scatter matrix (n−1)·Ŝ, not the sample covariance.
pub fn build_posterior(
    sample: &CovarianceEstimate,
    n: usize,
    prior_scale: Option<&Matrix>,
    c: f64,
) -> Result<InverseWishartPosterior> {
    if !(c > 0.0) {
        return Err(Error::InvalidInput(alloc::format!("shrinkage constant c={c} must be positive")));
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let p = sample.dim();
    let psi = match prior_scale {
        Some(m) => {
            if m.rows() != p || m.cols() != p {
                return Err(Error::ShapeError("prior scale does not match covariance".into()));
            }
            m.clone()
        }
        None => {
            let tau = sample.matrix().trace() / p as f64;
            if !(tau > 0.0) {
                return Err(Error::InvalidPrior);
            }
            Matrix::identity(p).scaled(tau)
        }
    };
    if !psi.is_symmetric(SYMMETRY_TOL) || Cholesky::new(&psi).is_err() {
        return Err(Error::InvalidPrior);
    }
    let n0 = prior_df(p, n, c);
    let scatter = sample.matrix().scaled((n - 1) as f64);
    let mut scale = psi.add(&scatter)?;
    scale.symmetrize();
    Ok(InverseWishartPosterior {
        df: n0 + n as f64 - 1.0,
        scale,
        prior_df: n0,
        prior_scale: psi,
        nobs: n,
        sample: sample.matrix().clone(),
    })
}

impl InverseWishartPosterior {
    pub fn dim(&self) -> usize {
        self.scale.rows()
    }

    /// Weight on the prior mode, q = (n₀+P+1)/(n₀+n+P).
    pub fn shrinkage_weight(&self) -> f64 {
        let p = self.dim() as f64;
        (self.prior_df + p + 1.0) / (self.prior_df + self.nobs as f64 + p)
    }

    /// Posterior mean Ψ'/(ν − P − 1), defined for ν > P + 1.
    pub fn mean(&self) -> Option<Matrix> {
        let denom = self.df - self.dim() as f64 - 1.0;
        (denom > 0.0).then(|| self.scale.scaled(1.0 / denom))
    }

    pub fn sampler(&self) -> Result<InverseWishartSampler> {
        InverseWishartSampler::new(self.df, &self.scale)
    }
}

/// Posterior mode as the shrinkage average
/// q·Ψ/(n₀+P+1) + (1 − q)·Ŝ, Ŝ the sample covariance.
pub fn posterior_mode(post: &InverseWishartPosterior) -> Result<CovarianceEstimate> {
    let p = post.dim() as f64;
    let q = post.shrinkage_weight();
    let prior_mode = post.prior_scale.scaled(q / (post.prior_df + p + 1.0));
    let mut m = prior_mode.add(&post.sample.scaled(1.0 - q))?;
    m.symmetrize();
    CovarianceEstimate::new(m, Provenance::PosteriorMode)
}

/// Posterior mode in closed form, (Ψ + S)/(n₀ + n + P).
pub fn posterior_mode_direct(post: &InverseWishartPosterior) -> Result<CovarianceEstimate> {
    let denom = post.prior_df + post.nobs as f64 + post.dim() as f64;
    CovarianceEstimate::new(post.scale.scaled(1.0 / denom), Provenance::PosteriorMode)
}

/// Draws from 𝒲⁻¹(ν, Ψ) by inverting a Bartlett-constructed Wishart draw
/// with scale Ψ⁻¹, using triangular solves only.
#[derive(Debug, Clone)]
pub struct InverseWishartSampler {
    df: f64,
    scale_factor: Matrix,
    chi: Vec<ChiSquared<f64>>,
}

impl InverseWishartSampler {
    pub fn new(df: f64, scale: &Matrix) -> Result<Self> {
        let p = scale.rows();
        if !(df > p as f64 - 1.0) {
            return Err(Error::ImproperPosterior { df, min: p as f64 - 1.0 });
        }
        let scale_factor = Cholesky::new(scale).map_err(|_| Error::InvalidPrior)?.into_factor();
        let chi = (0..p)
            .map(|i| ChiSquared::new(df - i as f64).expect("positive degrees of freedom"))
            .collect();
        Ok(InverseWishartSampler { df, scale_factor, chi })
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn dim(&self) -> usize {
        self.scale_factor.rows()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Matrix {
        let p = self.dim();
        // Bartlett factor: A A' ~ W(ν, I)
        let mut a = Matrix::zeros(p, p);
        for i in 0..p {
            a[(i, i)] = libm::sqrt(self.chi[i].sample(rng));
            for j in 0..i {
                a[(i, j)] = StandardNormal.sample(rng);
            }
        }
        let a_inv = lower_triangular_inverse(&a).expect("chi-square draws are positive");
        // Σ = (U A⁻ᵀ)(U A⁻ᵀ)ᵀ with Ψ = U Uᵀ
        let mut t = Matrix::zeros(p, p);
        for i in 0..p {
            for j in 0..p {
                t[(i, j)] = (0..=i.min(j))
                    .map(|k| self.scale_factor[(i, k)] * a_inv[(j, k)])
                    .sum();
            }
        }
        let mut sigma = t.matmul(&t.transpose()).expect("square");
        sigma.symmetrize();
        sigma
    }

    pub fn draw_estimate(&self, rng: &mut KeyedRng) -> CovarianceEstimate {
        let m = self.draw(rng);
        let p = m.rows();
        CovarianceEstimate { matrix: m, provenance: Provenance::PosteriorDraw, rank: p }
    }
}

/// One posterior draw keyed by `seed`.
pub fn sample_posterior(post: &InverseWishartPosterior, seed: u64) -> Result<CovarianceEstimate> {
    sample_posterior_indexed(post, seed, 0)
}

/// Draw number `index` of the stream keyed by `seed`.
pub fn sample_posterior_indexed(
    post: &InverseWishartPosterior,
    seed: u64,
    index: u64,
) -> Result<CovarianceEstimate> {
    let sampler = post.sampler()?;
    let mut rng = keyed_rng(seed, index);
    CovarianceEstimate::new(sampler.draw(&mut rng), Provenance::PosteriorDraw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::PanelKind;

    fn panel(rows: &[&[f64]]) -> ReturnPanel {
        ReturnPanel::from_matrix(Matrix::from_rows(rows).unwrap(), PanelKind::LogReturn)
    }

    #[test]
    fn identical_rows_give_zero_covariance() {
        let s = sample_covariance(&panel(&[&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]])).unwrap();
        assert_eq!(s.matrix().max_abs(), 0.0);
        assert_eq!(s.rank(), 0);
    }

    #[test]
    fn short_panel_is_rank_deficient() {
        let s = sample_covariance(&panel(&[
            &[0.01, -0.02, 0.03, 0.00, 0.01],
            &[0.02, 0.01, -0.01, 0.02, -0.03],
            &[-0.01, 0.00, 0.02, -0.02, 0.01],
        ]))
        .unwrap();
        assert!(s.rank() <= 2);
        assert!(!s.is_positive_definite());
    }

    #[test]
    fn one_row_is_insufficient() {
        assert!(matches!(
            sample_covariance(&panel(&[&[1.0, 2.0]])),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn prior_degrees_of_freedom() {
        assert_eq!(prior_df(10, 4, 3.0), 9.0);
        assert_eq!(prior_df(5, 40, 3.0), 3.0);
        let s = CovarianceEstimate::new(Matrix::identity(10), Provenance::Sample).unwrap();
        let post = build_posterior(&s, 4, None, 3.0).unwrap();
        assert_eq!(post.prior_df, 9.0);
        assert_eq!(post.df, 12.0);
    }

    #[test]
    fn posterior_scale_is_prior_plus_scatter() {
        let s = CovarianceEstimate::new(
            Matrix::from_rows(&[[2.0, 0.5], [0.5, 1.0]]).unwrap(),
            Provenance::Sample,
        )
        .unwrap();
        let psi = Matrix::from_rows(&[[1.0, 0.1], [0.1, 3.0]]).unwrap();
        let post = build_posterior(&s, 6, Some(&psi), 3.0).unwrap();
        let expected = psi.add(&s.matrix().scaled(5.0)).unwrap();
        assert_eq!(post.scale, expected);
    }

    #[test]
    fn non_pd_prior_rejected() {
        let s = CovarianceEstimate::new(Matrix::identity(2), Provenance::Sample).unwrap();
        let bad = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]).unwrap();
        assert_eq!(build_posterior(&s, 5, Some(&bad), 3.0).unwrap_err(), Error::InvalidPrior);
        let zero = CovarianceEstimate::new(Matrix::zeros(2, 2), Provenance::Sample).unwrap();
        assert_eq!(build_posterior(&zero, 5, None, 3.0).unwrap_err(), Error::InvalidPrior);
    }

    #[test]
    fn mode_is_identity_when_targets_coincide() {
        let (p, n, c) = (4usize, 7usize, 3.0);
        let n0 = prior_df(p, n, c);
        let psi = Matrix::identity(p).scaled(n0 + p as f64 + 1.0);
        let s = CovarianceEstimate::new(Matrix::identity(p), Provenance::Sample).unwrap();
        let post = build_posterior(&s, n, Some(&psi), c).unwrap();
        let mode = posterior_mode(&post).unwrap();
        assert!(mode.matrix().sub(&Matrix::identity(p)).unwrap().max_abs() < 1e-14);
        let q = post.shrinkage_weight();
        assert!(q > 0.0 && q < 1.0);
    }

    #[test]
    fn improper_posterior_rejected() {
        let err = InverseWishartSampler::new(2.0, &Matrix::identity(4)).unwrap_err();
        assert!(matches!(err, Error::ImproperPosterior { .. }));
    }

    #[test]
    fn draws_are_deterministic_and_pd() {
        let s = CovarianceEstimate::new(
            Matrix::from_rows(&[[2.0, 0.3, 0.1], [0.3, 1.0, 0.2], [0.1, 0.2, 0.5]]).unwrap(),
            Provenance::Sample,
        )
        .unwrap();
        let post = build_posterior(&s, 10, None, 3.0).unwrap();
        let a = sample_posterior(&post, 11).unwrap();
        let b = sample_posterior(&post, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.is_positive_definite());
        assert_eq!(a.provenance(), Provenance::PosteriorDraw);
    }
}
