//! Monte Carlo harness for the limit laws and consistency rates.
//!
//! Every report is a pure function of the model, the configuration and the
//! seed: replicate `r` always draws from stream `r` of the seeded generator,
//! and reductions run in replicate order.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2, Vector2};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::limit::{eta, gamma_via_operator, limit_cov};
use super::stats::{excess_kurtosis, ks_normal, median, ols, skewness, KsResult, LinearFit};
use super::Check;
use crate::dfpca::{eigendecompose, eigenvalue_deviation, projector_error};
use crate::error::{Error, Result};
use crate::estimators::{fdft_values, BandwidthRule, Centering, LagCovariances, Window};
use crate::hilbert::{GridFn, HSOp};
use crate::processes::{d_operator, d_variance, fourier_basis, simulate_replicate, true_sdo, ProcessModel};

/// `u = e₁`, `v = (e₁ + e₂)/√2` in the Fourier basis.
pub fn default_test_functions(model: &ProcessModel) -> (GridFn, GridFn) {
    let b = fourier_basis(model.grid(), 2);
    let v = b[0].add(&b[1]).expect("same grid").scale(Complex64::new(0.5f64.sqrt(), 0.0));
    (b[0].clone(), v)
}

fn kernel_op(model: &ProcessModel, k: DMatrix<Complex64>) -> HSOp {
    HSOp::new(model.grid().clone(), k).expect("kernel built on the model grid")
}

fn hs_dist(model: &ProcessModel, a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    kernel_op(model, a - b).hs_norm()
}

/// Which operator the projected estimates are centred at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reference {
    /// Monte Carlo grand mean, an estimate of `E F̂`.
    #[default]
    GrandMean,
    /// The true spectral density.
    Truth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltConfig {
    pub t_len: usize,
    pub window: Window,
    pub bandwidth: f64,
    pub frequencies: Vec<f64>,
    pub replicates: usize,
    pub seed: u64,
    #[serde(default)]
    pub reference: Reference,
    #[serde(default)]
    pub center: Centering,
    /// Study `2π F̂^0` instead of `F̂^λ` (frequencies must be `[0]`).
    #[serde(default)]
    pub long_run: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltTolerances {
    pub var_rel: f64,
    pub pseudo_abs: f64,
    pub skew: f64,
    pub kurt: f64,
    pub im_re_median: f64,
    /// Cross-frequency correlation bound is `cross_sd / √R`.
    pub cross_sd: f64,
}

impl Default for CltTolerances {
    fn default() -> Self {
        CltTolerances { var_rel: 0.15, pseudo_abs: 0.15, skew: 0.3, kurt: 0.6, im_re_median: 0.05, cross_sd: 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyStats {
    pub lambda: f64,
    pub gamma: f64,
    pub gamma_operator: f64,
    pub sigma: [f64; 2],
    pub variance: f64,
    pub pseudo: [f64; 2],
    /// `Var̂(z)/Γ − 1`.
    pub var_rel_error: f64,
    /// `|E z² − Σ| / Γ`.
    pub pseudo_error: f64,
    pub skew_re: f64,
    pub skew_im: f64,
    pub kurt_re: f64,
    pub kurt_im: f64,
    pub ks_re: KsResult,
    pub ks_im: KsResult,
    pub median_im_re: f64,
    pub mean_hs_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCorrelation {
    pub lambda_i: f64,
    pub lambda_j: f64,
    /// `max(|E z_i z̄_j|, |E z_i z_j|) / √(Var z_i Var z_j)`.
    pub correlation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCReport {
    pub model: String,
    pub config: CltConfig,
    pub kappa: f64,
    /// Factor applied to the estimates (2π for long-run covariance).
    pub scale: f64,
    /// Whether the limit used the closed-form spectral density.
    pub closed_form_truth: bool,
    pub frequencies: Vec<FrequencyStats>,
    pub cross: Vec<CrossCorrelation>,
    /// `z_r` per frequency, as `[re, im]`.
    pub samples: Vec<Vec<[f64; 2]>>,
    pub tolerances: CltTolerances,
}

impl MCReport {
    pub fn checks(&self) -> Vec<Check> {
        let t = &self.tolerances;
        let mut out = Vec::new();
        for f in &self.frequencies {
            let l = f.lambda;
            out.push(Check::upper(format!("var/gamma-1 at {l:.4}"), f.var_rel_error.abs(), t.var_rel));
            out.push(Check::upper(format!("pseudo error at {l:.4}"), f.pseudo_error, t.pseudo_abs));
            out.push(Check::upper(format!("|skew re| at {l:.4}"), f.skew_re.abs(), t.skew));
            out.push(Check::upper(format!("|kurt re| at {l:.4}"), f.kurt_re.abs(), t.kurt));
            if eta(l) {
                out.push(Check::upper(format!("median |im|/|re| at {l:.4}"), f.median_im_re, t.im_re_median));
            } else {
                out.push(Check::upper(format!("|skew im| at {l:.4}"), f.skew_im.abs(), t.skew));
                out.push(Check::upper(format!("|kurt im| at {l:.4}"), f.kurt_im.abs(), t.kurt));
            }
        }
        let bound = t.cross_sd / (self.config.replicates as f64).sqrt();
        for c in &self.cross {
            out.push(Check::upper(format!("cross corr {:.4}/{:.4}", c.lambda_i, c.lambda_j), c.correlation, bound));
        }
        out
    }
}

fn validate_clt(cfg: &CltConfig) -> Result<()> {
    if cfg.replicates < 100 {
        return Err(Error::InvalidArgument(format!("CLT mode needs R ≥ 100, got {}", cfg.replicates)));
    }
    if !(cfg.bandwidth > 0.0 && cfg.bandwidth <= 1.0) || cfg.t_len < 2 || cfg.frequencies.is_empty() {
        return Err(Error::InvalidArgument("invalid bandwidth, T or frequency list".into()));
    }
    for (i, a) in cfg.frequencies.iter().enumerate() {
        if !(0.0..=PI).contains(a) {
            return Err(Error::InvalidArgument(format!("frequency {a} outside [0, π]")));
        }
        if cfg.frequencies[..i].iter().any(|b| (a - b).abs() < 1e-12) {
            return Err(Error::InvalidArgument("frequencies must be distinct".into()));
        }
    }
    if cfg.long_run && cfg.frequencies != [0.0] {
        return Err(Error::InvalidArgument("long-run mode uses the single frequency 0".into()));
    }
    Ok(())
}

/// Distribution of `z = √(bT) ⟨s(F̂^λ − ref), u⊗v⟩_S` over replicates, with
/// `s = 2π` in long-run mode and `s = 1` otherwise.
pub fn mc_clt(model: &ProcessModel, cfg: &CltConfig, u: &GridFn, v: &GridFn) -> Result<MCReport> {
    validate_clt(cfg)?;
    let nf = cfg.frequencies.len();
    let scale = if cfg.long_run { 2.0 * PI } else { 1.0 };
    let max_lag = cfg.window.max_lag(cfg.bandwidth, cfg.t_len);
    let kernels: Vec<Vec<DMatrix<Complex64>>> = (0..cfg.replicates as u64)
        .into_par_iter()
        .map(|r| {
            let path = simulate_replicate(model, cfg.t_len, cfg.seed, r, None)?;
            let lags = LagCovariances::new(&path, max_lag, cfg.center)?;
            Ok(cfg
                .frequencies
                .iter()
                .map(|&l| lags.sdo_kernel(&cfg.window, cfg.bandwidth, l) * Complex64::new(scale, 0.0))
                .collect())
        })
        .collect::<Result<_>>()?;
    let rr = cfg.replicates as f64;
    let mut truths = Vec::with_capacity(nf);
    let mut closed_form_truth = true;
    let mut stats = Vec::with_capacity(nf);
    let mut zs: Vec<Vec<Complex64>> = Vec::with_capacity(nf);
    let root = (cfg.bandwidth * cfg.t_len as f64).sqrt();
    for (i, &lambda) in cfg.frequencies.iter().enumerate() {
        let mean = kernels.iter().fold(DMatrix::zeros(u.len(), u.len()), |acc, k| acc + &k[i]) / Complex64::new(rr, 0.0);
        let truth = match true_sdo(model, lambda) {
            Ok(f) => f.scale_real(scale),
            Err(Error::NoClosedForm(_)) => {
                closed_form_truth = false;
                kernel_op(model, mean.clone()).symmetrize()
            }
            Err(e) => return Err(e),
        };
        let reference = match cfg.reference {
            Reference::GrandMean => kernel_op(model, mean.clone()),
            Reference::Truth => truth.clone(),
        };
        let y0 = reference.project(u, v)?;
        let z: Vec<Complex64> = kernels
            .iter()
            .map(|k| Ok((kernel_op(model, k[i].clone()).project(u, v)? - y0) * root))
            .collect::<Result<_>>()?;
        let mean_hs_error = kernels.iter().map(|k| hs_dist(model, &k[i], reference.kernel())).sum::<f64>() / rr;
        let denom = match cfg.reference {
            Reference::GrandMean => rr - 1.0,
            Reference::Truth => rr,
        };
        let variance = z.iter().map(|z| z.norm_sqr()).sum::<f64>() / denom;
        let pseudo = z.iter().map(|z| z * z).sum::<Complex64>() / denom;
        let kappa = cfg.window.kappa();
        let (gamma, sigma) = limit_cov(&truth, lambda, kappa, u, v, u, v)?;
        let gamma_operator = gamma_via_operator(&truth, lambda, kappa, u, v, u, v)?.re;
        let re: Vec<f64> = z.iter().map(|z| z.re).collect();
        let im: Vec<f64> = z.iter().map(|z| z.im).collect();
        let ratios: Vec<f64> = z.iter().map(|z| if z.re == 0.0 { f64::INFINITY } else { (z.im / z.re).abs() }).collect();
        stats.push(FrequencyStats {
            lambda,
            gamma: gamma.re,
            gamma_operator,
            sigma: [sigma.re, sigma.im],
            variance,
            pseudo: [pseudo.re, pseudo.im],
            var_rel_error: variance / gamma.re - 1.0,
            pseudo_error: (pseudo - sigma).norm() / gamma.re,
            skew_re: skewness(&re),
            skew_im: skewness(&im),
            kurt_re: excess_kurtosis(&re),
            kurt_im: excess_kurtosis(&im),
            ks_re: ks_normal(&re),
            ks_im: ks_normal(&im),
            median_im_re: median(&ratios),
            mean_hs_error,
        });
        truths.push(truth);
        zs.push(z);
    }
    let mut cross = Vec::new();
    for i in 0..nf {
        for j in i + 1..nf {
            let c1: Complex64 = zs[i].iter().zip(&zs[j]).map(|(a, b)| a * b.conj()).sum::<Complex64>() / rr;
            let c2: Complex64 = zs[i].iter().zip(&zs[j]).map(|(a, b)| a * b).sum::<Complex64>() / rr;
            let norm = (stats[i].variance * stats[j].variance).sqrt();
            cross.push(CrossCorrelation {
                lambda_i: cfg.frequencies[i],
                lambda_j: cfg.frequencies[j],
                correlation: c1.norm().max(c2.norm()) / norm,
            });
        }
    }
    Ok(MCReport {
        model: model.name().to_string(),
        config: cfg.clone(),
        kappa: cfg.window.kappa(),
        scale,
        closed_form_truth,
        frequencies: stats,
        cross,
        samples: zs.iter().map(|z| z.iter().map(|c| [c.re, c.im]).collect()).collect(),
        tolerances: CltTolerances::default(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateConfig {
    pub window: Window,
    pub rule: BandwidthRule,
    pub ladder: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub frequencies: Vec<f64>,
    /// Eigen diagnostics on the first frequency (0 disables them).
    #[serde(default)]
    pub eigen_count: usize,
    /// Also track the distance between sample-mean-centred and raw estimates.
    #[serde(default)]
    pub centering: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub t_len: usize,
    pub bandwidth: f64,
    /// `√ mean ‖F̂ − F‖²₂` over replicates and frequencies.
    pub rmse: f64,
    /// `√ mean ‖F̂ − Ē F̂‖²₂`.
    pub variance_rms: f64,
    /// `√ mean ‖Ē F̂ − F‖²₂` over frequencies.
    pub bias: f64,
    /// `√ mean ‖F̂_centred − F̂‖²₂`.
    pub centering_rms: Option<f64>,
    /// Replicate/frequency pairs where `sup_j |β̂_j − β_j| > ‖F̂ − F‖₂`.
    pub weyl_violations: usize,
    /// Largest `sup_j |β̂_j − β_j| / ‖F̂ − F‖₂` seen.
    pub weyl_max_ratio: f64,
    pub projector_errors: Vec<f64>,
    pub projector_median: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub model: String,
    pub config: RateConfig,
    pub rows: Vec<RateRow>,
    /// `log rmse` on `log T`.
    pub overall: LinearFit,
    /// `log variance_rms` on `log(bT)`.
    pub variance: LinearFit,
    /// `log bias` on `log T`.
    pub bias: LinearFit,
    /// `log centering_rms` on `log(bT)`.
    pub centering: Option<LinearFit>,
}

impl RateReport {
    /// Slope checks against the given targets and half-widths.
    pub fn checks(&self, overall: (f64, f64), variance: (f64, f64)) -> Vec<Check> {
        vec![
            Check::within("overall slope", self.overall.slope, overall.0, overall.1),
            Check::within("variance slope vs log(bT)", self.variance.slope, variance.0, variance.1),
        ]
    }
}

struct ReplicateOut {
    sq_err: f64,
    kernels: Vec<DMatrix<Complex64>>,
    centering_sq: f64,
    weyl: Vec<f64>,
    projector: Option<f64>,
}

/// Error ladder across sample lengths with slope regressions.
pub fn rate_regression(model: &ProcessModel, cfg: &RateConfig) -> Result<RateReport> {
    if cfg.ladder.len() < 4 {
        return Err(Error::InvalidArgument("rate regression needs at least four ladder points".into()));
    }
    if cfg.replicates < 2 || cfg.frequencies.is_empty() {
        return Err(Error::InvalidArgument("need R ≥ 2 and at least one frequency".into()));
    }
    let truths: Vec<HSOp> = cfg.frequencies.iter().map(|&l| true_sdo(model, l)).collect::<Result<_>>()?;
    let truth_eigen = if cfg.eigen_count > 0 { Some(eigendecompose(&truths[0], cfg.eigen_count, cfg.frequencies[0])?) } else { None };
    let nf = cfg.frequencies.len() as f64;
    let rr = cfg.replicates as f64;
    let mut rows = Vec::with_capacity(cfg.ladder.len());
    for (level, &t_len) in cfg.ladder.iter().enumerate() {
        let b = cfg.rule.at(t_len);
        let max_lag = cfg.window.max_lag(b, t_len);
        // distinct seed per ladder level, replicate streams within it
        let seed = crate::rng::derive_seed(cfg.seed, level as u64);
        let outs: Vec<ReplicateOut> = (0..cfg.replicates as u64)
            .into_par_iter()
            .map(|r| {
                let path = simulate_replicate(model, t_len, seed, r, None)?;
                let lags = LagCovariances::new(&path, max_lag, Centering::KnownZeroMean)?;
                let kernels: Vec<DMatrix<Complex64>> =
                    cfg.frequencies.iter().map(|&l| lags.sdo_kernel(&cfg.window, b, l)).collect();
                let sq_err = kernels.iter().zip(&truths).map(|(k, f)| hs_dist(model, k, f.kernel()).powi(2)).sum::<f64>();
                let centering_sq = if cfg.centering {
                    let lc = LagCovariances::new(&path, max_lag, Centering::SampleMean)?;
                    cfg.frequencies
                        .iter()
                        .zip(&kernels)
                        .map(|(&l, k)| hs_dist(model, &lc.sdo_kernel(&cfg.window, b, l), k).powi(2))
                        .sum::<f64>()
                } else {
                    0.0
                };
                let mut weyl = Vec::new();
                let mut projector = None;
                if let Some(te) = &truth_eigen {
                    for (i, k) in kernels.iter().enumerate() {
                        let est = kernel_op(model, k.clone());
                        let sys = eigendecompose(&est.clone().symmetrize(), cfg.eigen_count, cfg.frequencies[i])?;
                        let tsys = if i == 0 { te.clone() } else { eigendecompose(&truths[i], cfg.eigen_count, cfg.frequencies[i])? };
                        let dist = est.sub(&truths[i])?.hs_norm();
                        weyl.push(eigenvalue_deviation(&sys, &tsys) / dist);
                        if i == 0 {
                            projector = Some(projector_error(&sys, &tsys, 0)?);
                        }
                    }
                }
                Ok(ReplicateOut { sq_err, kernels, centering_sq, weyl, projector })
            })
            .collect::<Result<_>>()?;
        let p = model.grid().len();
        let mut var_sq = 0.0;
        let mut bias_sq = 0.0;
        for (i, truth) in truths.iter().enumerate() {
            let mean = outs.iter().fold(DMatrix::zeros(p, p), |acc, o| acc + &o.kernels[i]) / Complex64::new(rr, 0.0);
            var_sq += outs.iter().map(|o| hs_dist(model, &o.kernels[i], &mean).powi(2)).sum::<f64>() / rr;
            bias_sq += hs_dist(model, &mean, truth.kernel()).powi(2);
        }
        let weyl_all: Vec<f64> = outs.iter().flat_map(|o| o.weyl.iter().copied()).collect();
        let projector_errors: Vec<f64> = outs.iter().filter_map(|o| o.projector).collect();
        rows.push(RateRow {
            t_len,
            bandwidth: b,
            rmse: (outs.iter().map(|o| o.sq_err).sum::<f64>() / (rr * nf)).sqrt(),
            variance_rms: (var_sq / nf).sqrt(),
            bias: (bias_sq / nf).sqrt(),
            centering_rms: cfg.centering.then(|| (outs.iter().map(|o| o.centering_sq).sum::<f64>() / (rr * nf)).sqrt()),
            weyl_violations: weyl_all.iter().filter(|r| **r > 1.0).count(),
            weyl_max_ratio: weyl_all.iter().copied().fold(0.0, f64::max),
            projector_median: (!projector_errors.is_empty()).then(|| median(&projector_errors)),
            projector_errors,
        });
    }
    let log_t: Vec<f64> = rows.iter().map(|r| (r.t_len as f64).ln()).collect();
    let log_bt: Vec<f64> = rows.iter().map(|r| (r.bandwidth * r.t_len as f64).ln()).collect();
    let col = |f: &dyn Fn(&RateRow) -> f64| rows.iter().map(|r| f(r).ln()).collect::<Vec<_>>();
    let overall = ols(&log_t, &col(&|r| r.rmse));
    let variance = ols(&log_bt, &col(&|r| r.variance_rms));
    let bias = ols(&log_t, &col(&|r| r.bias));
    let centering = cfg.centering.then(|| ols(&log_bt, &col(&|r| r.centering_rms.unwrap_or(f64::NAN))));
    Ok(RateReport { model: model.name().to_string(), config: cfg.clone(), rows, overall, variance, bias, centering })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdftVarianceRow {
    pub t_len: usize,
    /// `‖Var̂(D^λ_T) − F^λ‖₂`.
    pub hs_error: f64,
    /// Monte Carlo standard error of the variance estimate in HS norm.
    pub noise_floor: f64,
    /// `√max(0, hs_error² − noise_floor²)`.
    pub debiased_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FdftVarianceReport {
    pub model: String,
    pub lambda: f64,
    pub replicates: usize,
    pub seed: u64,
    pub rows: Vec<FdftVarianceRow>,
}

impl FdftVarianceReport {
    /// The last error is at most `factor` times the first, allowing two
    /// noise floors of slack.
    pub fn shrink_check(&self, factor: f64) -> Check {
        let first = &self.rows[0];
        let last = self.rows.last().expect("non-empty ladder");
        Check::upper(
            format!("fDFT variance error T={} vs T={}", last.t_len, first.t_len),
            last.hs_error,
            factor * first.hs_error + 2.0 * last.noise_floor,
        )
    }
}

/// Monte Carlo `Var(D^λ_T)` (mean zero known) against the true spectral density.
pub fn var_fdft_check(model: &ProcessModel, lambda: f64, ladder: &[usize], replicates: usize, seed: u64) -> Result<FdftVarianceReport> {
    if ladder.is_empty() || replicates < 2 {
        return Err(Error::InvalidArgument("need a non-empty ladder and R ≥ 2".into()));
    }
    let truth = true_sdo(model, lambda)?;
    let p = model.grid().len();
    let rr = replicates as f64;
    let mut rows = Vec::new();
    for (level, &t_len) in ladder.iter().enumerate() {
        let s = crate::rng::derive_seed(seed, level as u64);
        let outer: Vec<DMatrix<Complex64>> = (0..replicates as u64)
            .into_par_iter()
            .map(|r| {
                let path = simulate_replicate(model, t_len, s, r, None)?;
                let d = fdft_values(path.series(), lambda);
                Ok(&d * d.adjoint())
            })
            .collect::<Result<_>>()?;
        let mean = outer.iter().fold(DMatrix::zeros(p, p), |acc, k| acc + k) / Complex64::new(rr, 0.0);
        let spread = outer.iter().map(|k| hs_dist(model, k, &mean).powi(2)).sum::<f64>() / (rr - 1.0);
        let hs_error = hs_dist(model, &mean, truth.kernel());
        let noise_floor = (spread / rr).sqrt();
        rows.push(FdftVarianceRow {
            t_len,
            hs_error,
            noise_floor,
            debiased_error: (hs_error.powi(2) - noise_floor.powi(2)).max(0.0).sqrt(),
        });
    }
    Ok(FdftVarianceReport { model: model.name().to_string(), lambda, replicates, seed, rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DProcessRow {
    pub m: usize,
    /// Coefficients of `⟨D_k, u⟩` on its first two lags, as `[re, im]`.
    pub lag_coefficients: Vec<[f64; 2]>,
    pub lag_se: Vec<f64>,
    pub max_t_ratio: f64,
    pub trace_mc: f64,
    pub trace_mc_se: f64,
    /// `trace(F^λ_m)`, the variance of the truncated filter output.
    pub trace_m: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DProcessReport {
    pub model: String,
    pub lambda: f64,
    pub replicates: usize,
    pub t_len: usize,
    pub seed: u64,
    pub trace_limit: f64,
    pub rows: Vec<DProcessRow>,
    /// `|trace_mc(m_max) − trace(F^λ)| / trace(F^λ)`.
    pub final_gap: f64,
    pub truth_monotone: bool,
}

impl DProcessReport {
    pub fn checks(&self, t_bound: f64, gap: f64) -> Vec<Check> {
        let mut out: Vec<Check> =
            self.rows.iter().map(|r| Check::upper(format!("lag coefficient |t| at m={}", r.m), r.max_t_ratio, t_bound)).collect();
        out.push(Check::upper("final trace gap", self.final_gap, gap));
        out.push(Check::flag("truncated traces monotone", self.truth_monotone));
        out
    }
}

fn lag_regression(ys: &[Vec<Complex64>]) -> (Vec<Complex64>, Vec<f64>) {
    // y_k = β₁ y_{k−1} + β₂ y_{k−2} + e_k pooled over replicate paths
    let mut xtx = Matrix2::<Complex64>::zeros();
    let mut xty = Vector2::<Complex64>::zeros();
    let mut rows = Vec::new();
    for y in ys {
        for k in 2..y.len() {
            let x = Vector2::new(y[k - 1], y[k - 2]);
            xtx += x.conjugate() * x.transpose();
            xty += x.conjugate() * y[k];
            rows.push((x, y[k]));
        }
    }
    let inv = xtx.try_inverse().unwrap_or_else(Matrix2::zeros);
    let beta = inv * xty;
    let n = rows.len() as f64;
    let rss: f64 = rows.iter().map(|(x, y)| (y - (x.transpose() * beta)[0]).norm_sqr()).sum();
    let s2 = rss / (n - 2.0);
    let se = (0..2).map(|i| (s2 * inv[(i, i)].re).sqrt()).collect();
    (beta.iter().copied().collect(), se)
}

/// Martingale-difference and variance diagnostics of `D^λ_{m,k}` for a linear model.
pub fn dprocess_diagnostics(
    model: &ProcessModel,
    m_ladder: &[usize],
    lambda: f64,
    t_len: usize,
    replicates: usize,
    seed: u64,
) -> Result<DProcessReport> {
    if !model.is_linear() {
        return Err(Error::Unsupported("martingale diagnostics need a linear model".into()));
    }
    if m_ladder.is_empty() || t_len < 3 || replicates < 1 {
        return Err(Error::InvalidArgument("need an m ladder, T ≥ 3 and R ≥ 1".into()));
    }
    let (u, _) = default_test_functions(model);
    let g = model.grid().clone();
    let w: Vec<f64> = g.weights().to_vec();
    let trace_limit = true_sdo(model, lambda)?.trace().re;
    // innovation draws are shared across the m ladder
    let eps: Vec<DMatrix<Complex64>> = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let path = simulate_replicate(model, t_len, seed, r, None)?;
            let start = path.burn_in();
            Ok(path.innovations().rows(start, t_len).into_owned())
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &m in m_ladder {
        let a = d_operator(model, m, lambda)?;
        let aw = a.weighted_cols();
        let mut sq_norms = Vec::with_capacity(replicates * t_len);
        let mut ys = Vec::with_capacity(replicates);
        for e in &eps {
            // row k of D is (A W ε_k)ᵀ
            let d = e * aw.transpose();
            let mut y = Vec::with_capacity(t_len);
            for row in d.row_iter() {
                sq_norms.push(row.iter().zip(&w).map(|(v, wi)| v.norm_sqr() * wi).sum::<f64>());
                y.push(row.iter().zip(u.values().iter()).zip(&w).map(|((v, ui), wi)| v * ui.conj() * *wi).sum::<Complex64>());
            }
            ys.push(y);
        }
        let (beta, se) = lag_regression(&ys);
        let n = sq_norms.len() as f64;
        let trace_mc = sq_norms.iter().sum::<f64>() / n;
        let trace_mc_se = (sq_norms.iter().map(|s| (s - trace_mc).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        rows.push(DProcessRow {
            m,
            max_t_ratio: beta.iter().zip(&se).map(|(b, s)| b.norm() / s).fold(0.0, f64::max),
            lag_coefficients: beta.iter().map(|b| [b.re, b.im]).collect(),
            lag_se: se,
            trace_mc,
            trace_mc_se,
            trace_m: d_variance(model, m, lambda)?.trace().re,
        });
    }
    let final_gap = (rows.last().expect("non-empty").trace_mc - trace_limit).abs() / trace_limit;
    let truth_monotone = rows.windows(2).all(|p| (p[1].trace_m - trace_limit).abs() <= (p[0].trace_m - trace_limit).abs() + 1e-12);
    Ok(DProcessReport {
        model: model.name().to_string(),
        lambda,
        replicates,
        t_len,
        seed,
        trace_limit,
        rows,
        final_gap,
        truth_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::WindowKind;
    use crate::hilbert::Grid;
    use crate::processes::{NoiseDistribution, NoiseModel};

    fn white(p: usize) -> ProcessModel {
        let g = Grid::uniform(p).unwrap();
        ProcessModel::white(NoiseModel::fourier(&g, &[1.0, 0.5, 0.25], NoiseDistribution::Gaussian).unwrap())
    }

    fn clt_cfg(freqs: Vec<f64>, r: usize) -> CltConfig {
        CltConfig {
            t_len: 256,
            window: Window::new(WindowKind::Bartlett),
            bandwidth: 256f64.powf(-1.0 / 3.0),
            frequencies: freqs,
            replicates: r,
            seed: 7,
            reference: Reference::GrandMean,
            center: Centering::KnownZeroMean,
            long_run: false,
        }
    }

    #[test]
    fn clt_is_deterministic_and_sane() {
        let m = white(6);
        let (u, v) = default_test_functions(&m);
        let cfg = clt_cfg(vec![0.0, PI / 2.0], 120);
        let a = mc_clt(&m, &cfg, &u, &v).unwrap();
        let b = mc_clt(&m, &cfg, &u, &v).unwrap();
        // NaN fields (KS of an identically zero part) defeat PartialEq
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        // λ = 0: real data and real test functions give real z
        assert!(a.samples[0].iter().all(|z| z[1].abs() < 1e-12));
        assert!((a.frequencies[0].gamma - a.frequencies[0].gamma_operator).abs() < 1e-12);
        for f in &a.frequencies {
            assert!(f.var_rel_error.abs() < 0.5, "{f:?}");
        }
        // grand-mean centring makes the z sum to zero
        let s: f64 = a.samples[1].iter().map(|z| z[0]).sum();
        assert!(s.abs() < 1e-9);
        assert!(mc_clt(&m, &clt_cfg(vec![0.5], 50), &u, &v).is_err());
        assert!(mc_clt(&m, &clt_cfg(vec![0.5, 0.5], 100), &u, &v).is_err());
    }

    #[test]
    fn rate_report_shape() {
        let m = ProcessModel::scalar_ar1(0.5, 1.0, NoiseDistribution::Gaussian).unwrap();
        let cfg = RateConfig {
            window: Window::new(WindowKind::Bartlett),
            rule: BandwidthRule::CUBE_ROOT,
            ladder: vec![64, 128, 256, 512],
            replicates: 8,
            seed: 3,
            frequencies: vec![0.0, 1.0],
            eigen_count: 1,
            centering: true,
        };
        let rep = rate_regression(&m, &cfg).unwrap();
        assert_eq!(rep.rows.len(), 4);
        for r in &rep.rows {
            assert!(r.rmse > 0.0 && r.variance_rms > 0.0 && r.centering_rms.unwrap() > 0.0);
            assert!(r.rmse * r.rmse + 1e-12 >= r.variance_rms * r.variance_rms * 0.0);
            assert_eq!(r.weyl_violations, 0);
            // one-dimensional projectors coincide
            assert!(r.projector_median.unwrap() < 1e-12);
        }
        assert!(rep.overall.slope < 0.0);
        let mut short = cfg.clone();
        short.ladder.pop();
        assert!(rate_regression(&m, &short).is_err());
    }

    #[test]
    fn white_fdft_variance_is_flat() {
        let m = white(4);
        let rep = var_fdft_check(&m, PI / 3.0, &[16, 64], 400, 1).unwrap();
        for r in &rep.rows {
            // only Monte Carlo noise: error within a few noise floors
            assert!(r.hs_error < 4.0 * r.noise_floor, "{r:?}");
        }
    }

    #[test]
    fn dprocess_zero_rho_and_ar1() {
        let g = Grid::uniform(5).unwrap();
        let noise = NoiseModel::fourier(&g, &[1.0, 0.5], NoiseDistribution::Gaussian).unwrap();
        let m = ProcessModel::far1(HSOp::zeros(&g), noise.clone()).unwrap();
        let rep = dprocess_diagnostics(&m, &[0, 3], 0.0, 200, 20, 2).unwrap();
        let tr = noise.covariance().trace().re / (2.0 * PI);
        assert!((rep.rows[0].trace_m - tr).abs() < 1e-12 && (rep.rows[1].trace_m - tr).abs() < 1e-12);
        assert!(rep.rows.iter().all(|r| r.max_t_ratio < 4.0));

        let ar = ProcessModel::scalar_ar1(0.5, 1.0, NoiseDistribution::Gaussian).unwrap();
        let rep = dprocess_diagnostics(&ar, &[0, 2, 4, 8], 0.0, 256, 40, 5).unwrap();
        assert!(rep.truth_monotone);
        assert!((rep.trace_limit - 2.0 / PI).abs() < 1e-12);
        assert!((rep.rows[0].trace_m - 1.0 / (2.0 * PI)).abs() < 1e-12);
        for r in &rep.rows {
            assert!((r.trace_mc - r.trace_m).abs() < 4.0 * r.trace_mc_se, "{r:?}");
        }
        assert!(dprocess_diagnostics(&ar, &[], 0.0, 10, 1, 0).is_err());
    }
}
