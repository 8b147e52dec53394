use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("return window is empty: need at least {needed} prices, got {got}")]
    EmptyWindow { needed: usize, got: usize },
    #[error("index {index} out of range (valid 1..={max})")]
    IndexError { index: usize, max: usize },
    #[error("value outside the function domain: {0}")]
    DomainError(String),
    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("design matrix is rank deficient")]
    SingularDesign,
    #[error("shape mismatch: {0}")]
    ShapeError(String),
    #[error("invalid bootstrap specification: {0}")]
    InvalidSpec(String),
    #[error("{redraws} of {replications} paired resamples were rank deficient")]
    DegenerateResampling { redraws: usize, replications: usize },
    #[error("prior scale is not positive definite")]
    InvalidPrior,
    #[error("posterior degrees of freedom {df} must exceed {min}")]
    ImproperPosterior { df: f64, min: f64 },
    #[error("covariance matrix is singular or not positive definite")]
    SingularCovariance,
    #[error("target return {target} outside attainable range [{min}, {max}]")]
    InfeasibleTarget { target: f64, min: f64, max: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("portfolio has zero variance")]
    DegeneratePortfolio,
    #[error("input series is empty")]
    EmptyInput,
    #[error("no-arbitrage condition violated: need d < 1 + r/n < u (d={d}, growth={growth}, u={u})")]
    ArbitrageError { d: f64, growth: f64, u: f64 },
}

impl Error {
    /// True for failures of the numerics (as opposed to bad user input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::DegenerateInput(_)
                | Error::SingularDesign
                | Error::DegenerateResampling { .. }
                | Error::SingularCovariance
                | Error::DegeneratePortfolio
                | Error::ImproperPosterior { .. }
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
