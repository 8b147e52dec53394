//! Numerical core for equity risk analysis: return algebra, market
//! efficiency tests, CAPM with bootstrap inference, Bayesian covariance
//! regularization, portfolio risk, tail risk and lattice/GBM pricing.
//!
//! The crate is `no_std` with `alloc`. Every Monte Carlo routine draws from
//! counter-keyed streams, so results do not depend on how work is scheduled.
#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN fails validation; index loops
// read better than iterator chains in the matrix kernels.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]
extern crate alloc;

pub mod bootstrap;
pub mod capm;
pub mod covariance;
pub mod efficiency;
pub mod error;
pub mod linalg;
pub mod portfolio;
pub mod pricing;
pub mod rng;
pub mod special;
pub mod stats;
pub mod tailrisk;
pub mod timeseries;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use rng::{keyed_rng, Executor, Sequential};
