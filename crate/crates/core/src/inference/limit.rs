//! Limiting covariance and pseudo-covariance of projected spectral estimates.
//!
//! For `z = √(bT) ⟨F̂^λ − E F̂^λ, u⊗v⟩_S` and `z′` built from `(u′, v′)` the
//! complex Gaussian pairing of the fDFT gives
//!
//! * `E z z̄′ → κ (⟨F u′,u⟩⟨F v,v′⟩ + η ⟨F v̄′,u⟩ conj⟨F ū′,v⟩)`
//! * `E z z′ → κ (⟨F v′,u⟩⟨F v,u′⟩ + η ⟨F ū′,u⟩ conj⟨F v̄′,v⟩)`
//!
//! with `κ = ∫ w²` and `η = 1` exactly when `λ ∈ {0, π}`. For real test
//! functions and `u′ = u`, `v′ = v` these reduce to
//! `κ(F(χ_uu) F(χ_vv) + η F(χ_uv)²)` and `κ(η F(χ_uu) F(χ_vv) + F(χ_uv)²)`.
//! The pseudo-covariance terms assume a real-valued process, so that the
//! fDFT at `0` and `π` is real.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::Result;
use crate::hilbert::{kron_apply, kron_t_apply, tensor, GridFn, HSOp};

/// `1_{{0,π}}(λ)` on `[0, π]`, with a small tolerance.
pub fn eta(lambda: f64) -> bool {
    let r = lambda.rem_euclid(PI);
    r < 1e-12 || PI - r < 1e-12
}

fn same_frequency(a: f64, b: f64) -> bool {
    let d = (a - b).rem_euclid(2.0 * PI);
    d < 1e-12 || 2.0 * PI - d < 1e-12
}

fn ip(f: &HSOp, x: &GridFn, y: &GridFn) -> Result<Complex64> {
    f.apply(x)?.inner(y)
}

/// `(Γ, Σ)` for the test pairs `(u, v)` and `(u′, v′)` at one frequency.
pub fn limit_cov(
    f: &HSOp,
    lambda: f64,
    kappa: f64,
    u: &GridFn,
    v: &GridFn,
    u2: &GridFn,
    v2: &GridFn,
) -> Result<(Complex64, Complex64)> {
    let mut gamma = ip(f, u2, u)? * ip(f, v, v2)?;
    let mut sigma = ip(f, v2, u)? * ip(f, v, u2)?;
    if eta(lambda) {
        gamma += ip(f, &v2.conj(), u)? * ip(f, &u2.conj(), v)?.conj();
        sigma += ip(f, &u2.conj(), u)? * ip(f, &v2.conj(), v)?.conj();
    }
    Ok((gamma * kappa, sigma * kappa))
}

/// `κ (F ⊗̃ F + η F ⊗̃_⊤ F)` applied to `C`.
pub fn limit_cov_operator(f: &HSOp, lambda: f64, kappa: f64, c: &HSOp) -> Result<HSOp> {
    let mut out = kron_apply(f, f, c)?;
    if eta(lambda) {
        out = out.add(&kron_t_apply(f, f, c)?)?;
    }
    Ok(out.scale_real(kappa))
}

/// `κ (η F ⊗̃ F + F ⊗̃_⊤ F)` applied to `C`.
pub fn limit_pseudo_operator(f: &HSOp, lambda: f64, kappa: f64, c: &HSOp) -> Result<HSOp> {
    let mut out = kron_t_apply(f, f, c)?;
    if eta(lambda) {
        out = out.add(&kron_apply(f, f, c)?)?;
    }
    Ok(out.scale_real(kappa))
}

/// `Γ` through the operator route: `⟨Γ_op(u′⊗v′), u⊗v⟩_S`.
pub fn gamma_via_operator(f: &HSOp, lambda: f64, kappa: f64, u: &GridFn, v: &GridFn, u2: &GridFn, v2: &GridFn) -> Result<Complex64> {
    limit_cov_operator(f, lambda, kappa, &tensor(u2, v2)?)?.hs_inner(&tensor(u, v)?)
}

/// `Σ` through the operator route applied to the conjugated second tensor.
/// Agrees with [`limit_cov`] whenever `F` has a real kernel.
pub fn sigma_via_operator(f: &HSOp, lambda: f64, kappa: f64, u: &GridFn, v: &GridFn, u2: &GridFn, v2: &GridFn) -> Result<Complex64> {
    limit_pseudo_operator(f, lambda, kappa, &tensor(&u2.conj(), &v2.conj())?)?.hs_inner(&tensor(u, v)?)
}

/// Covariance structure between two frequencies of `[0, π]`.
#[derive(Clone, Debug)]
pub struct CovStructure {
    pub lambda_i: f64,
    pub lambda_j: f64,
    f: HSOp,
    kappa: f64,
}

impl CovStructure {
    /// `f` is the spectral density at `lambda_i`.
    pub fn new(f: HSOp, lambda_i: f64, lambda_j: f64, kappa: f64) -> Self {
        CovStructure { lambda_i, lambda_j, f, kappa }
    }

    /// Whether the two frequencies interact (`λ_i ± λ_j ≡ 0 mod 2π`).
    pub fn coupled(&self) -> bool {
        same_frequency(self.lambda_i, self.lambda_j) || same_frequency(self.lambda_i, -self.lambda_j)
    }

    pub fn gamma(&self, u: &GridFn, v: &GridFn, u2: &GridFn, v2: &GridFn) -> Result<Complex64> {
        if !self.coupled() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(limit_cov(&self.f, self.lambda_i, self.kappa, u, v, u2, v2)?.0)
    }

    pub fn sigma(&self, u: &GridFn, v: &GridFn, u2: &GridFn, v2: &GridFn) -> Result<Complex64> {
        if !self.coupled() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(limit_cov(&self.f, self.lambda_i, self.kappa, u, v, u2, v2)?.1)
    }
}
