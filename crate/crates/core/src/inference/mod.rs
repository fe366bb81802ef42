//! Limit laws of spectral estimates: covariance structures, the Monte Carlo
//! harness, rate regressions and Gaussianity diagnostics.

mod limit;
mod mc;
pub mod stats;

use serde::{Deserialize, Serialize};

pub use limit::{
    eta, gamma_via_operator, limit_cov, limit_cov_operator, limit_pseudo_operator, sigma_via_operator, CovStructure,
};
pub use mc::{
    default_test_functions, dprocess_diagnostics, mc_clt, rate_regression, var_fdft_check, CltConfig, CltTolerances,
    CrossCorrelation, DProcessReport, DProcessRow, FdftVarianceReport, FdftVarianceRow, FrequencyStats, MCReport,
    RateConfig, RateReport, RateRow, Reference,
};

/// One named pass/fail comparison in a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: String,
    pub pass: bool,
}

impl Check {
    pub fn upper(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Check { name: name.into(), value, bound: format!("<= {bound:.6}"), pass: value <= bound }
    }

    pub fn within(name: impl Into<String>, value: f64, target: f64, half_width: f64) -> Self {
        Check {
            name: name.into(),
            value,
            bound: format!("{target:.4} ± {half_width:.4}"),
            pass: (value - target).abs() <= half_width,
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, bound: "true".into(), pass: ok }
    }
}

/// Whether every check passed.
pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}
