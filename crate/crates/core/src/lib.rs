//! Frequency-domain estimation for stationary functional time series.
//!
//! The crate discretises the function space on a quadrature grid and provides
//! lag-window spectral density operator estimates, dynamic principal
//! components, long-run covariance, dependence coefficients and cumulant
//! tensors, plus a Monte Carlo harness for checking their large-sample
//! behaviour.

pub mod cli;
pub mod cumulants;
pub mod dfpca;
pub mod error;
pub mod estimators;
pub mod hilbert;
pub mod inference;
pub mod processes;
mod quad;
pub mod rng;

pub use error::{Error, Result};
