//! Functional DFT, periodogram and lag-window spectral density estimates.
//!
//! Empirical lag covariances use the `1/T` denominator throughout, so the
//! lag-window form is algebraically identical to the weighted double sum
//! `(2πT)^{-1} Σ_{s,t} w(b(s−t)) e^{−iλ(s−t)} X_s ⊗ X_t`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::window::Window;
use crate::error::{Error, Result};
use crate::hilbert::{Grid, GridFn, HSOp};
use crate::processes::SamplePath;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Centering {
    #[default]
    KnownZeroMean,
    SampleMean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationConfig {
    pub window: Window,
    pub bandwidth: f64,
    pub frequencies: Vec<f64>,
    #[serde(default)]
    pub center: Centering,
    /// Clip negative eigenvalues of each estimate to zero.
    #[serde(default)]
    pub clip_negative: bool,
}

impl EstimationConfig {
    pub fn new(window: Window, bandwidth: f64, frequencies: Vec<f64>) -> Result<Self> {
        let cfg = EstimationConfig { window, bandwidth, frequencies, center: Centering::KnownZeroMean, clip_negative: false };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_center(mut self, center: Centering) -> Self {
        self.center = center;
        self
    }

    pub fn with_clipping(mut self, clip: bool) -> Self {
        self.clip_negative = clip;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth <= 1.0) {
            return Err(Error::InvalidArgument(format!("bandwidth {} outside (0, 1]", self.bandwidth)));
        }
        if self.frequencies.is_empty() {
            return Err(Error::InvalidArgument("empty frequency list".into()));
        }
        if let Some(l) = self.frequencies.iter().find(|l| !(0.0..=PI).contains(*l)) {
            return Err(Error::InvalidArgument(format!("frequency {l} outside [0, π]")));
        }
        Ok(())
    }

    /// Warnings for a sample of length `t_len` (currently only `b T < 8`).
    pub fn warnings(&self, t_len: usize) -> Vec<String> {
        let bt = self.bandwidth * t_len as f64;
        if bt < 8.0 {
            vec![format!("b·T = {bt:.3} is below 8; the smoothing span is very short")]
        } else {
            Vec::new()
        }
    }
}

/// Fourier frequencies `2πk/T` within `[0, π]`.
pub fn fourier_frequencies(t_len: usize) -> Vec<f64> {
    (0..=t_len / 2).map(|k| 2.0 * PI * k as f64 / t_len as f64).collect()
}

/// `D^λ_T = (2πT)^{−1/2} Σ_{t=1}^{T} X_t e^{−iλt}`.
pub fn fdft(path: &SamplePath, lambda: f64) -> Result<GridFn> {
    let t_len = path.len();
    if t_len == 0 {
        return Err(Error::InvalidArgument("empty path".into()));
    }
    let v = fdft_values(path.series(), lambda);
    Ok(GridFn::from_vector_unchecked(path.grid().clone(), v))
}

pub(crate) fn fdft_values(series: &DMatrix<Complex64>, lambda: f64) -> DVector<Complex64> {
    let t_len = series.nrows();
    let phases = DVector::from_fn(t_len, |r, _| Complex64::from_polar(1.0, -lambda * (r + 1) as f64));
    series.tr_mul(&phases) / Complex64::new((2.0 * PI * t_len as f64).sqrt(), 0.0)
}

/// `I^λ_T = D^λ_T ⊗ D^λ_T`.
pub fn periodogram(path: &SamplePath, lambda: f64) -> Result<HSOp> {
    let d = fdft(path, lambda)?;
    let k = d.values() * d.values().adjoint();
    Ok(HSOp::from_kernel_unchecked(path.grid().clone(), k).symmetrize())
}

fn centered(series: &DMatrix<Complex64>, center: Centering) -> std::borrow::Cow<'_, DMatrix<Complex64>> {
    match center {
        Centering::KnownZeroMean => std::borrow::Cow::Borrowed(series),
        Centering::SampleMean => {
            let t = series.nrows() as f64;
            let mean = series.row_sum() / Complex64::new(t, 0.0);
            let mut out = series.clone();
            for mut row in out.row_iter_mut() {
                row -= &mean;
            }
            std::borrow::Cow::Owned(out)
        }
    }
}

/// Empirical lag covariance kernels `Ĉ_0 .. Ĉ_L`, shared across frequencies.
#[derive(Clone, Debug)]
pub struct LagCovariances {
    grid: Arc<Grid>,
    t_len: usize,
    covs: Vec<DMatrix<Complex64>>,
}

impl LagCovariances {
    /// `Ĉ_h = T^{-1} Σ_{t=1}^{T−h} X_{t+h} ⊗ X_t` for `h = 0..=max_lag`.
    pub fn new(path: &SamplePath, max_lag: usize, center: Centering) -> Result<Self> {
        Self::from_series(path.grid().clone(), path.series(), max_lag, center)
    }

    pub fn from_series(grid: Arc<Grid>, series: &DMatrix<Complex64>, max_lag: usize, center: Centering) -> Result<Self> {
        let t_len = series.nrows();
        if t_len == 0 {
            return Err(Error::InvalidArgument("empty path".into()));
        }
        if series.ncols() != grid.len() {
            return Err(Error::Dimension(format!("series has {} columns, grid {}", series.ncols(), grid.len())));
        }
        let x = centered(series, center);
        let xc = x.map(|v| v.conj());
        let scale = Complex64::new(1.0 / t_len as f64, 0.0);
        let max_lag = max_lag.min(t_len - 1);
        let covs = (0..=max_lag)
            .map(|h| {
                let n = t_len - h;
                x.rows(h, n).tr_mul(&xc.rows(0, n)) * scale
            })
            .collect();
        Ok(LagCovariances { grid, t_len, covs })
    }

    pub fn max_lag(&self) -> usize {
        self.covs.len() - 1
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    /// `Ĉ_h` for `|h| ≤ L`, using `Ĉ_{−h} = Ĉ_h†`.
    pub fn cov(&self, h: i64) -> Option<HSOp> {
        let k = self.covs.get(h.unsigned_abs() as usize)?;
        let k = if h < 0 { k.adjoint() } else { k.clone() };
        Some(HSOp::from_kernel_unchecked(self.grid.clone(), k))
    }

    /// `(2π)^{-1} Σ_{|h|≤L} w(b h) e^{−iλh} Ĉ_h` as a kernel matrix.
    pub fn sdo_kernel(&self, window: &Window, bandwidth: f64, lambda: f64) -> DMatrix<Complex64> {
        let mut acc = self.covs[0].clone();
        for (h, c) in self.covs.iter().enumerate().skip(1) {
            let wh = window.eval(bandwidth * h as f64);
            if wh == 0.0 {
                continue;
            }
            let z = Complex64::from_polar(wh, -lambda * h as f64);
            acc += c * z + c.adjoint() * z.conj();
        }
        acc / Complex64::new(2.0 * PI, 0.0)
    }

    pub fn sdo(&self, window: &Window, bandwidth: f64, lambda: f64) -> HSOp {
        HSOp::from_kernel_unchecked(self.grid.clone(), self.sdo_kernel(window, bandwidth, lambda))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyDiagnostics {
    pub lambda: f64,
    pub hermitian_defect: f64,
    pub min_eigenvalue: f64,
}

/// Spectral density estimates on a list of frequencies.
#[derive(Clone, Debug)]
pub struct SpecEstimate {
    pub config: EstimationConfig,
    pub t_len: usize,
    pub operators: Vec<HSOp>,
    pub diagnostics: Vec<FrequencyDiagnostics>,
    pub warnings: Vec<String>,
}

impl SpecEstimate {
    pub fn frequencies(&self) -> &[f64] {
        &self.config.frequencies
    }

    pub fn at(&self, lambda: f64) -> Option<&HSOp> {
        self.config.frequencies.iter().position(|l| (l - lambda).abs() < 1e-12).map(|i| &self.operators[i])
    }
}

fn clip_negative(op: &HSOp) -> HSOp {
    let (vals, funcs) = op.hermitian_eigen();
    let p = op.dim();
    let mut k = DMatrix::zeros(p, p);
    for (j, v) in vals.iter().enumerate() {
        if *v > 0.0 {
            let f = funcs.column(j);
            k += f * f.adjoint() * Complex64::new(*v, 0.0);
        }
    }
    HSOp::from_kernel_unchecked(op.grid().clone(), k).symmetrize()
}

/// Lag-window estimate `F̂^λ` at every configured frequency.
pub fn lag_window_sdo(path: &SamplePath, config: &EstimationConfig) -> Result<SpecEstimate> {
    config.validate()?;
    let t_len = path.len();
    let lags = LagCovariances::new(path, config.window.max_lag(config.bandwidth, t_len), config.center)?;
    let results: Vec<(HSOp, FrequencyDiagnostics)> = config
        .frequencies
        .par_iter()
        .map(|&lambda| {
            let raw = lags.sdo(&config.window, config.bandwidth, lambda);
            let hermitian_defect = raw.hermitian_defect();
            let op = if config.clip_negative { clip_negative(&raw) } else { raw };
            let (vals, _) = op.hermitian_eigen();
            let min_eigenvalue = vals.last().copied().unwrap_or(0.0);
            (op, FrequencyDiagnostics { lambda, hermitian_defect, min_eigenvalue })
        })
        .collect();
    let (operators, diagnostics) = results.into_iter().unzip();
    Ok(SpecEstimate { config: config.clone(), t_len, operators, diagnostics, warnings: config.warnings(t_len) })
}

/// `b^{-1} ∫_{−π}^{π} K((λ−α)/b) I^α_T dα` with `K` periodised and the
/// integral evaluated by the `n_quad`-point periodic trapezoid rule.
pub fn smoothed_periodogram_sdo(path: &SamplePath, window: &Window, bandwidth: f64, lambda: f64, n_quad: usize) -> Result<HSOp> {
    let kernel = window
        .spectral_kernel()
        .ok_or_else(|| Error::Unsupported(format!("window '{}' has no registered spectral partner", window.name())))?;
    if !(bandwidth > 0.0 && bandwidth <= 1.0) || n_quad == 0 {
        return Err(Error::InvalidArgument("bandwidth must lie in (0, 1] and n_quad be positive".into()));
    }
    if path.is_empty() {
        return Err(Error::InvalidArgument("empty path".into()));
    }
    // images beyond this many periods change the result by O(b / reach)
    let reach = 200i64;
    let step = 2.0 * PI / n_quad as f64;
    let terms: Vec<(f64, DVector<Complex64>)> = (0..n_quad)
        .into_par_iter()
        .map(|j| {
            let alpha = -PI + j as f64 * step;
            let y = lambda - alpha;
            let kp: f64 = (-reach..=reach).map(|k| kernel((y + 2.0 * PI * k as f64) / bandwidth)).sum::<f64>() / bandwidth;
            (kp * step, fdft_values(path.series(), alpha))
        })
        .collect();
    let p = path.grid().len();
    let mut acc = DMatrix::zeros(p, p);
    for (c, d) in &terms {
        acc += d * d.adjoint() * Complex64::new(*c, 0.0);
    }
    Ok(HSOp::from_kernel_unchecked(path.grid().clone(), acc).symmetrize())
}

/// `2π F̂^0`, the long-run covariance estimate.
pub fn long_run_cov(path: &SamplePath, config: &EstimationConfig) -> Result<HSOp> {
    let lags = LagCovariances::new(path, config.window.max_lag(config.bandwidth, path.len()), config.center)?;
    Ok(lags.sdo(&config.window, config.bandwidth, 0.0).scale_real(2.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::window::WindowKind;
    use crate::processes::{simulate, simulate_replicate, NoiseDistribution, NoiseModel, ProcessModel};
    use crate::rng::replicate_rng;
    use rand_distr::{Distribution, StandardNormal};

    fn random_path(t: usize, p: usize, seed: u64) -> SamplePath {
        let mut rng = replicate_rng(seed, 0);
        let g = Grid::uniform(p).unwrap();
        let s = DMatrix::from_fn(t, p, |_, _| {
            let (a, b): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            Complex64::new(a, b)
        });
        SamplePath::from_series(g, s).unwrap()
    }

    /// Weighted double sum over all time pairs.
    fn brute_force(path: &SamplePath, w: &Window, b: f64, lambda: f64) -> HSOp {
        let t_len = path.len();
        let p = path.grid().len();
        let mut k = DMatrix::zeros(p, p);
        for s in 1..=t_len {
            for t in 1..=t_len {
                let d = s as f64 - t as f64;
                let c = Complex64::from_polar(w.eval(b * d), -lambda * d);
                let xs = path.x(s);
                let xt = path.x(t);
                k += xs.values() * xt.values().adjoint() * c;
            }
        }
        HSOp::new(path.grid().clone(), k / Complex64::new(2.0 * PI * t_len as f64, 0.0)).unwrap()
    }

    #[test]
    fn lag_sum_equals_double_sum() {
        let path = random_path(6, 4, 11);
        for w in super::super::window_library() {
            for b in [0.3, 1.0] {
                let cfg = EstimationConfig::new(w.clone(), b, vec![0.0, 1.1, PI]).unwrap();
                let est = lag_window_sdo(&path, &cfg).unwrap();
                for (op, &l) in est.operators.iter().zip(&cfg.frequencies) {
                    let bf = brute_force(&path, &w, b, l);
                    assert!(op.sub(&bf).unwrap().hs_norm() <= 1e-12 * bf.hs_norm(), "{} b={b} λ={l}", w.name());
                }
            }
        }
    }

    #[test]
    fn single_observation() {
        let path = random_path(1, 3, 2);
        let cfg = EstimationConfig::new(Window::new(WindowKind::Parzen), 0.5, vec![0.0, 2.0]).unwrap();
        let est = lag_window_sdo(&path, &cfg).unwrap();
        let x = path.x(1);
        let want = crate::hilbert::tensor(&x, &x).unwrap().scale_real(1.0 / (2.0 * PI));
        for op in &est.operators {
            assert!(op.sub(&want).unwrap().hs_norm() < 1e-14);
        }
        let d = fdft(&path, 0.7).unwrap();
        let want = x.scale(Complex64::from_polar(1.0 / (2.0 * PI).sqrt(), -0.7));
        assert!((d.values() - want.values()).norm() < 1e-15);
    }

    #[test]
    fn zero_path_and_periodogram_trace() {
        let g = Grid::uniform(4).unwrap();
        let zero = SamplePath::from_series(g, DMatrix::zeros(10, 4)).unwrap();
        assert_eq!(fdft(&zero, 1.0).unwrap().norm(), 0.0);
        assert_eq!(periodogram(&zero, 1.0).unwrap().hs_norm(), 0.0);
        let w = Window::new(WindowKind::Bartlett);
        assert_eq!(smoothed_periodogram_sdo(&zero, &w, 0.5, 1.0, 64).unwrap().hs_norm(), 0.0);
        let path = random_path(9, 5, 4);
        let i = periodogram(&path, 0.4).unwrap();
        let d = fdft(&path, 0.4).unwrap();
        assert!((i.trace().re - d.norm().powi(2)).abs() < 1e-12);
        let (vals, _) = i.hermitian_eigen();
        assert!(vals[1].abs() < 1e-12 && vals[0] > 0.0);
    }

    #[test]
    fn hermitian_and_conjugate_even() {
        let path = random_path(40, 4, 5);
        let w = Window::new(WindowKind::TukeyHanning);
        let lags = LagCovariances::new(&path, w.max_lag(0.2, 40), Centering::KnownZeroMean).unwrap();
        let f = lags.sdo(&w, 0.2, 0.9);
        assert!(f.hermitian_defect() < 1e-14);
        // F^{−λ} is the adjoint kernel's transpose; for complex data the
        // relation holds for the conjugated series
        let conj_path = SamplePath::from_series(path.grid().clone(), path.series().map(|v| v.conj())).unwrap();
        let lc = LagCovariances::new(&conj_path, w.max_lag(0.2, 40), Centering::KnownZeroMean).unwrap();
        let fm = lc.sdo(&w, 0.2, -0.9);
        assert!(fm.sub(&f.conj_op()).unwrap().hs_norm() < 1e-13);
        let f2 = lags.sdo(&w, 0.2, 0.9 + 2.0 * PI);
        assert!(f2.sub(&f).unwrap().hs_norm() < 1e-12);
    }

    #[test]
    fn smoothed_periodogram_matches_lag_window() {
        let path = random_path(64, 3, 8);
        for kind in [WindowKind::Bartlett, WindowKind::Parzen] {
            let w = Window::new(kind);
            let b = 0.125;
            let lag = LagCovariances::new(&path, w.max_lag(b, 64), Centering::KnownZeroMean).unwrap().sdo(&w, b, 0.6);
            let sm = smoothed_periodogram_sdo(&path, &w, b, 0.6, 1024).unwrap();
            assert!(sm.sub(&lag).unwrap().hs_norm() < 1e-3 * lag.hs_norm(), "{kind:?}");
            let (vals, _) = sm.hermitian_eigen();
            assert!(*vals.last().unwrap() > -1e-8);
        }
        assert!(smoothed_periodogram_sdo(&path, &Window::new(WindowKind::Truncated), 0.2, 0.0, 16).is_err());
    }

    #[test]
    fn sample_mean_centering_removes_offset() {
        let path = random_path(30, 3, 9);
        let shifted = SamplePath::from_series(path.grid().clone(), path.series().map(|v| v + Complex64::new(5.0, -1.0))).unwrap();
        let cfg = EstimationConfig::new(Window::new(WindowKind::Bartlett), 0.2, vec![0.0, 1.0]).unwrap().with_center(Centering::SampleMean);
        let a = lag_window_sdo(&path, &cfg).unwrap();
        let b = lag_window_sdo(&shifted, &cfg).unwrap();
        for (x, y) in a.operators.iter().zip(&b.operators) {
            assert!(x.sub(y).unwrap().hs_norm() < 1e-11);
        }
    }

    #[test]
    fn long_run_cov_real_for_real_data() {
        let m = ProcessModel::scalar_ar1(0.5, 1.0, NoiseDistribution::Gaussian).unwrap();
        let path = simulate(&m, 512, 3).unwrap();
        let cfg = EstimationConfig::new(Window::new(WindowKind::Bartlett), 0.2, vec![0.0]).unwrap();
        let lr = long_run_cov(&path, &cfg).unwrap();
        let (re, im) = lr.real_imag_norms();
        assert!(im <= 1e-10 * re);
    }

    #[test]
    fn ar1_long_run_variance_on_average() {
        // 2π f(0) = 1/(1−ρ)² = 4
        let m = ProcessModel::scalar_ar1(0.5, 1.0, NoiseDistribution::Gaussian).unwrap();
        let t = 4096;
        let b = (t as f64).powf(-1.0 / 3.0);
        let cfg = EstimationConfig::new(Window::new(WindowKind::Bartlett), b, vec![0.0]).unwrap();
        let mean: f64 = (0..50)
            .map(|r| {
                let p = simulate_replicate(&m, t, 17, r, None).unwrap();
                long_run_cov(&p, &cfg).unwrap().kernel()[(0, 0)].re
            })
            .sum::<f64>()
            / 50.0;
        assert!((mean - 4.0).abs() < 0.4, "{mean}");
    }

    #[test]
    fn white_noise_fdft_variance() {
        let g = Grid::uniform(5).unwrap();
        let noise = NoiseModel::fourier(&g, &[1.0, 0.5], NoiseDistribution::Gaussian).unwrap();
        let m = ProcessModel::white(noise.clone());
        let r = 2000;
        let mut acc = DMatrix::zeros(5, 5);
        for rep in 0..r {
            let p = simulate_replicate(&m, 16, 5, rep, None).unwrap();
            let d = fdft(&p, PI / 2.0).unwrap();
            acc += d.values() * d.values().adjoint();
        }
        let v = HSOp::new(g.clone(), acc / Complex64::new(r as f64, 0.0)).unwrap();
        let want = noise.covariance().scale_real(1.0 / (2.0 * PI));
        assert!(v.sub(&want).unwrap().hs_norm() < 0.1 * want.hs_norm());
    }

    #[test]
    fn config_validation() {
        let w = Window::new(WindowKind::Bartlett);
        assert!(EstimationConfig::new(w.clone(), 0.0, vec![0.0]).is_err());
        assert!(EstimationConfig::new(w.clone(), 0.5, vec![]).is_err());
        assert!(EstimationConfig::new(w.clone(), 0.5, vec![4.0]).is_err());
        let cfg = EstimationConfig::new(w, 0.01, vec![0.0]).unwrap();
        assert_eq!(cfg.warnings(100).len(), 1);
        assert!(cfg.warnings(1000).is_empty());
        let f = fourier_frequencies(8);
        assert_eq!(f.len(), 5);
        assert!((f[4] - PI).abs() < 1e-15);
    }
}
