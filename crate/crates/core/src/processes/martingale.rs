//! `m`-dependent truncation and the frequency-weighted martingale process of
//! linear models.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::model::ProcessModel;
use super::simulate::SamplePath;
use crate::error::{Error, Result};
use crate::hilbert::{GridFn, HSOp};

/// `X^{(m)}_t = Σ_{j=0}^{m} ψ_j ε_{t−j}` built from the retained innovations.
pub fn mdep_truncate(model: &ProcessModel, path: &SamplePath, m: usize) -> Result<SamplePath> {
    if !model.is_linear() {
        return Err(Error::Unsupported("m-dependent truncation needs a linear model".into()));
    }
    if path.innovations().nrows() == 0 {
        return Err(Error::InvalidArgument("path carries no innovations".into()));
    }
    if m > path.burn_in() {
        return Err(Error::InvalidArgument(format!(
            "m = {m} needs innovations beyond the retained burn-in of {}",
            path.burn_in()
        )));
    }
    let psi = model.psi_mats(m)?;
    let eps = path.innovations();
    let t_len = path.len();
    let mut out = DMatrix::zeros(t_len, path.grid().len());
    for t in 0..t_len {
        let r = path.burn_in() + t;
        let mut x = nalgebra::DVector::zeros(path.grid().len());
        for (j, pj) in psi.iter().enumerate() {
            x += pj * eps.row(r - j).transpose();
        }
        out.row_mut(t).copy_from(&x.transpose());
    }
    Ok(path.with_series(out))
}

/// Filter `(2π)^{−1/2} Σ_{t=0}^{m} ψ_t e^{−iλt}` mapping `ε_k` to `D^λ_{m,k}`.
pub fn d_operator(model: &ProcessModel, m: usize, lambda: f64) -> Result<HSOp> {
    if !model.is_linear() {
        return Err(Error::Unsupported("closed-form martingale process needs a linear model".into()));
    }
    let mut acc = HSOp::zeros(model.grid());
    for t in 0..=m {
        acc = acc.add(&model.psi(t)?.scale(Complex64::from_polar(1.0, -lambda * t as f64)))?;
    }
    Ok(acc.scale_real(1.0 / (2.0 * PI).sqrt()))
}

/// `D^λ_{m,k}` for the innovation `ε_k` of a path.
pub fn d_process(model: &ProcessModel, path: &SamplePath, m: usize, lambda: f64, k: i64) -> Result<GridFn> {
    let eps = path
        .innovation(k)
        .ok_or_else(|| Error::InvalidArgument(format!("innovation at time {k} not retained")))?;
    d_operator(model, m, lambda)?.apply(&eps)
}

/// `Var(D^λ_{m,0}) = A C_ε A†` for the filter `A` above.
pub fn d_variance(model: &ProcessModel, m: usize, lambda: f64) -> Result<HSOp> {
    let a = d_operator(model, m, lambda)?;
    Ok(a.compose(&model.noise().effective_covariance())?.compose(&a.adjoint())?.symmetrize())
}
