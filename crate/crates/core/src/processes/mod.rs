//! Functional time series models, their simulation and closed-form truth.
//!
//! Supported models are white noise, FAR(1), MA(q) and a one-dependent
//! bilinear model `X_t = a(ε_t) + c(ε_{t−1}) ⊙ ε_t`. Innovations come from a
//! truncated eigen-expansion of the noise covariance.

pub mod config;
mod dependence;
mod martingale;
mod model;
mod simulate;
mod truth;

pub use config::{KernelSpec, ModelSpec, NoiseSpec};
pub use dependence::{nu_batch, nu_coefficient, nu_coupled, nu_exact, nu_higher, DependenceProfile, NuBatch, NuEstimate};
pub use martingale::{d_operator, d_process, d_variance, mdep_truncate};
pub use model::{fourier_basis, ModelKind, NoiseDistribution, NoiseModel, ProcessModel, DEFAULT_RANK_CAP};
pub use simulate::{simulate, simulate_replicate, SamplePath};
pub use truth::{sdo_lag_series, true_cov, true_sdo};
