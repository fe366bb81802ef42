//! Dependence coefficients.
//!
//! `ν(j) = ‖X_0 − E[X_0 | ε_{−j} integrated out]‖_p` and its
//! inclusion-exclusion generalisation over several lags. All supported models
//! are affine in each innovation separately, and innovations are independent
//! with mean zero, so integrating an innovation out is the same as setting it
//! to zero. Linear models use the moving-average form directly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::model::{ModelKind, NoiseDistribution, ProcessModel};
use crate::error::{Error, Result};
use crate::rng::replicate_rng;

/// One coefficient with its Monte Carlo standard error.
#[derive(Debug, Clone, Serialize)]
pub struct NuEstimate {
    pub lags: Vec<usize>,
    pub p: u32,
    pub estimate: f64,
    pub se: f64,
    /// Closed-form value when available.
    pub exact: Option<f64>,
    pub replicates: usize,
}

/// Collection of coefficients estimated on shared innovations.
#[derive(Debug, Clone, Serialize)]
pub struct DependenceProfile {
    pub p: u32,
    pub replicates: usize,
    pub entries: Vec<NuEstimate>,
}

/// Per-replicate `‖residual‖^p` for several lag tuples on common draws.
#[derive(Debug, Clone)]
pub struct NuBatch {
    tuples: Vec<Vec<usize>>,
    p: u32,
    /// `values[r][i]`: replicate `r`, tuple `i`.
    values: Vec<Vec<f64>>,
    exact: Vec<Option<f64>>,
}

impl NuBatch {
    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn replicates(&self) -> usize {
        self.values.len()
    }

    fn moment(&self, i: usize) -> f64 {
        self.values.iter().map(|v| v[i]).sum::<f64>() / self.values.len() as f64
    }

    fn gradient(&self, i: usize) -> f64 {
        let m = self.moment(i);
        if m > 0.0 {
            m.powf(1.0 / self.p as f64 - 1.0) / self.p as f64
        } else {
            0.0
        }
    }

    pub fn estimate(&self, i: usize) -> NuEstimate {
        let (est, se) = self.combination(&unit(self.tuples.len(), i));
        NuEstimate {
            lags: self.tuples[i].clone(),
            p: self.p,
            estimate: est,
            se,
            exact: self.exact[i],
            replicates: self.values.len(),
        }
    }

    pub fn profile(&self) -> DependenceProfile {
        DependenceProfile {
            p: self.p,
            replicates: self.values.len(),
            entries: (0..self.tuples.len()).map(|i| self.estimate(i)).collect(),
        }
    }

    /// `Σ c_i ν̂_i` with a delta-method standard error that accounts for the
    /// shared draws.
    pub fn combination(&self, coeffs: &[f64]) -> (f64, f64) {
        let n = self.values.len() as f64;
        let grads: Vec<f64> = (0..self.tuples.len()).map(|i| coeffs[i] * self.gradient(i)).collect();
        let est: f64 = (0..self.tuples.len())
            .map(|i| coeffs[i] * self.moment(i).max(0.0).powf(1.0 / self.p as f64))
            .sum();
        let lin: Vec<f64> = self.values.iter().map(|v| v.iter().zip(&grads).map(|(a, g)| a * g).sum()).collect();
        let mean = lin.iter().sum::<f64>() / n;
        let var = lin.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (est, (var / n).sqrt())
    }
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn check_inputs(p: u32, replicates: usize) -> Result<()> {
    if p != 2 && p != 4 {
        return Err(Error::InvalidArgument(format!("order p = {p}; supported orders are 2 and 4")));
    }
    if replicates < 2 {
        return Err(Error::InvalidArgument("at least two replicates are required".into()));
    }
    Ok(())
}

fn wnorm2(v: &DVector<Complex64>, w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, w)| a.norm_sqr() * w).sum()
}

/// Sign-weighted count of subsets whose lags cover `l`, negated: the
/// coefficient of `ψ_l ε_{−l}` in the linear inclusion-exclusion residual.
fn linear_coefficients(lags: &[usize]) -> Vec<(usize, f64)> {
    let k = lags.len();
    let mut distinct: Vec<usize> = lags.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    distinct
        .into_iter()
        .map(|l| {
            let mut c = 0.0;
            for mask in 1u32..(1 << k) {
                if (0..k).any(|i| mask & (1 << i) != 0 && lags[i] == l) {
                    let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    c -= sign;
                }
            }
            (l, c)
        })
        .filter(|(_, c)| *c != 0.0)
        .collect()
}

/// Inclusion-exclusion residual for one tuple given innovations `eps[l] = ε_{−l}`.
fn residual(
    model: &ProcessModel,
    psi: &[DMatrix<Complex64>],
    lags: &[usize],
    coeffs: &[(usize, f64)],
    eps: &[DVector<Complex64>],
) -> DVector<Complex64> {
    let p = model.grid().len();
    match model.kind() {
        ModelKind::Bilinear1 { .. } => {
            let mats = model.mats();
            let k = lags.len();
            let mut acc = DVector::zeros(p);
            for mask in 0u32..(1 << k) {
                let zeroed = |l: usize| (0..k).any(|i| mask & (1 << i) != 0 && lags[i] == l);
                let e0 = if zeroed(0) { DVector::zeros(p) } else { eps[0].clone() };
                let e1 = if zeroed(1) { DVector::zeros(p) } else { eps[1].clone() };
                let x = &mats[0] * &e0 + (&mats[1] * e1).component_mul(&e0);
                let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                acc += x * Complex64::new(sign, 0.0);
            }
            acc
        }
        _ => {
            let mut acc = DVector::zeros(p);
            for (l, c) in coeffs {
                acc += &psi[*l] * &eps[*l] * Complex64::new(*c, 0.0);
            }
            acc
        }
    }
}

/// Estimate the coefficients for every tuple on common innovations.
pub fn nu_batch(model: &ProcessModel, tuples: &[Vec<usize>], p: u32, replicates: usize, seed: u64) -> Result<NuBatch> {
    check_inputs(p, replicates)?;
    if tuples.iter().any(|t| t.is_empty()) {
        return Err(Error::InvalidArgument("empty lag tuple".into()));
    }
    let max_lag = tuples.iter().flat_map(|t| t.iter().cloned()).max().unwrap_or(0);
    let depth = max_lag.max(1);
    let psi = if model.is_linear() { model.psi_mats(max_lag)? } else { vec![] };
    let coeffs: Vec<Vec<(usize, f64)>> = tuples.iter().map(|t| linear_coefficients(t)).collect();
    let w = model.grid().weights().to_vec();
    let values: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let eps: Vec<DVector<Complex64>> = (0..=depth).map(|_| model.noise().sample_values(&mut rng)).collect();
            tuples
                .iter()
                .zip(&coeffs)
                .map(|(t, c)| {
                    let y = residual(model, &psi, t, c, &eps);
                    wnorm2(&y, &w).powf(p as f64 / 2.0)
                })
                .collect()
        })
        .collect();
    let exact = tuples.iter().map(|t| nu_exact(model, t, p)).collect();
    Ok(NuBatch { tuples: tuples.to_vec(), p, values, exact })
}

/// `ν_p(X_j)`.
pub fn nu_coefficient(model: &ProcessModel, j: usize, p: u32, replicates: usize, seed: u64) -> Result<NuEstimate> {
    Ok(nu_batch(model, &[vec![j]], p, replicates, seed)?.estimate(0))
}

/// Generalised coefficient for a tuple of at most three lags.
pub fn nu_higher(model: &ProcessModel, lags: &[usize], p: u32, replicates: usize, seed: u64) -> Result<NuEstimate> {
    if lags.is_empty() || lags.len() > 3 {
        return Err(Error::InvalidArgument(format!("{} lags; between 1 and 3 are supported", lags.len())));
    }
    Ok(nu_batch(model, &[lags.to_vec()], p, replicates, seed)?.estimate(0))
}

/// Coupled variant `‖X_j − X_j'‖_p` with `ε_0` swapped for an independent copy.
/// For `p = 2` it equals `√2 · ν_2(X_j)`.
pub fn nu_coupled(model: &ProcessModel, j: usize, p: u32, replicates: usize, seed: u64) -> Result<NuEstimate> {
    check_inputs(p, replicates)?;
    let depth = j.max(1);
    let psi = if model.is_linear() { model.psi_mats(j)? } else { vec![] };
    let w = model.grid().weights().to_vec();
    let pdim = model.grid().len();
    let values: Vec<f64> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let eps: Vec<DVector<Complex64>> = (0..=depth).map(|_| model.noise().sample_values(&mut rng)).collect();
            let alt = model.noise().sample_values(&mut rng);
            let d = match model.kind() {
                ModelKind::Bilinear1 { .. } => {
                    let mats = model.mats();
                    let eval = |e0: &DVector<Complex64>, e1: &DVector<Complex64>| &mats[0] * e0 + (&mats[1] * e1).component_mul(e0);
                    match j {
                        0 => eval(&eps[0], &eps[1]) - eval(&alt, &eps[1]),
                        1 => eval(&eps[0], &eps[1]) - eval(&eps[0], &alt),
                        _ => DVector::zeros(pdim),
                    }
                }
                _ => &psi[j] * (&eps[j] - alt),
            };
            wnorm2(&d, &w).powf(p as f64 / 2.0)
        })
        .collect();
    let batch = NuBatch { tuples: vec![vec![j]], p, values: values.into_iter().map(|v| vec![v]).collect(), exact: vec![None] };
    let mut est = batch.estimate(0);
    est.exact = nu_exact(model, &[j], p).map(|v| if p == 2 { v * 2f64.sqrt() } else { f64::NAN }).filter(|v| v.is_finite());
    Ok(est)
}

/// Closed form where one is available: linear models (`p = 2`, or `p = 4`
/// with Gaussian noise) and bilinear1 at `p = 2`.
pub fn nu_exact(model: &ProcessModel, lags: &[usize], p: u32) -> Option<f64> {
    let c_eps = model.noise().effective_covariance();
    let w = model.grid().weights();
    match model.kind() {
        ModelKind::Bilinear1 { a, c } => {
            if p != 2 {
                return None;
            }
            let has0 = lags.contains(&0);
            let has1 = lags.contains(&1);
            // X_0 = a ε_0 + (c ε_{−1}) ⊙ ε_0; the product term is orthogonal to a ε_0.
            let cc = c.compose(&c_eps).ok()?.compose(&c.adjoint()).ok()?;
            let prod: f64 = (0..w.len()).map(|i| w[i] * cc.kernel()[(i, i)].re * c_eps.kernel()[(i, i)].re).sum();
            let lin = a.compose(&c_eps).ok()?.compose(&a.adjoint()).ok()?.trace().re;
            let distinct: Vec<usize> = {
                let mut d = lags.to_vec();
                d.sort_unstable();
                d.dedup();
                d
            };
            let v2 = match (has0, has1, distinct.len()) {
                (true, false, 1) => lin + prod,
                (false, true, 1) => prod,
                (true, true, 2) => prod,
                _ => 0.0,
            };
            Some(v2.sqrt())
        }
        _ => {
            let mut sigma = crate::hilbert::HSOp::zeros(model.grid());
            for (l, coef) in linear_coefficients(lags) {
                let psi = model.psi(l).ok()?;
                let term = psi.compose(&c_eps).ok()?.compose(&psi.adjoint()).ok()?;
                sigma = sigma.add(&term.scale_real(coef * coef)).ok()?;
            }
            let tr = sigma.trace().re;
            match p {
                2 => Some(tr.max(0.0).sqrt()),
                4 if model.noise().distribution() == NoiseDistribution::Gaussian => {
                    let real = sigma.kernel().iter().all(|v| v.im.abs() < 1e-14);
                    real.then(|| (tr * tr + 2.0 * sigma.hs_norm_sqr()).powf(0.25))
                }
                _ => None,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{Grid, HSOp};
    use crate::processes::model::NoiseModel;

    fn ar1() -> ProcessModel {
        ProcessModel::scalar_ar1(0.5, 1.0, NoiseDistribution::Gaussian).unwrap()
    }

    fn bilinear() -> ProcessModel {
        let g = Grid::uniform(6).unwrap();
        let noise = NoiseModel::fourier(&g, &[1.0, 0.5], NoiseDistribution::Gaussian).unwrap();
        let a = HSOp::identity(&g).scale_real(0.5);
        let c = HSOp::from_real_fn(&g, |x, y| 0.8 * (1.0 + x * y));
        ProcessModel::bilinear1(a, c, noise).unwrap()
    }

    #[test]
    fn inclusion_exclusion_coefficients() {
        assert_eq!(linear_coefficients(&[3]), vec![(3, 1.0)]);
        assert!(linear_coefficients(&[1, 2]).is_empty());
        assert!(linear_coefficients(&[0, 1, 2]).is_empty());
        // duplicated lag collapses to the single-lag residual
        assert_eq!(linear_coefficients(&[2, 2]), vec![(2, 1.0)]);
    }

    #[test]
    fn ar1_exact_and_mc() {
        let m = ar1();
        let est = nu_coefficient(&m, 2, 2, 20_000, 5).unwrap();
        assert!((est.exact.unwrap() - 0.25).abs() < 1e-12);
        assert!((est.estimate - 0.25).abs() < 4.0 * est.se, "{est:?}");
        let coupled = nu_coupled(&m, 2, 2, 20_000, 6).unwrap();
        assert!((coupled.exact.unwrap() - 0.3535533905932738).abs() < 1e-12);
        assert!((coupled.estimate - coupled.exact.unwrap()).abs() < 4.0 * coupled.se);
    }

    #[test]
    fn p4_gaussian_exact() {
        let m = ar1();
        let est = nu_coefficient(&m, 1, 4, 40_000, 8).unwrap();
        // scalar Gaussian with variance 0.25: E Y^4 = 3 σ^4
        let want = (3.0 * 0.25f64.powi(2)).powf(0.25);
        assert!((est.exact.unwrap() - want).abs() < 1e-12);
        assert!((est.estimate - want).abs() < 4.0 * est.se);
    }

    #[test]
    fn white_and_finite_memory() {
        let g = Grid::uniform(4).unwrap();
        let noise = NoiseModel::fourier(&g, &[1.0], NoiseDistribution::Gaussian).unwrap();
        let w = ProcessModel::white(noise.clone());
        assert_eq!(nu_coefficient(&w, 1, 2, 100, 1).unwrap().estimate, 0.0);
        let maq = ProcessModel::maq(vec![HSOp::identity(&g), HSOp::identity(&g).scale_real(0.5)], noise).unwrap();
        assert_eq!(nu_coefficient(&maq, 2, 2, 100, 1).unwrap().estimate, 0.0);
        assert!(nu_coefficient(&maq, 1, 2, 100, 1).unwrap().estimate > 0.0);
    }

    #[test]
    fn linear_higher_order_vanishes() {
        let est = nu_higher(&ar1(), &[1, 3], 2, 500, 2).unwrap();
        assert!(est.estimate.abs() < 1e-12);
        assert!(nu_higher(&ar1(), &[0, 1, 2, 3], 2, 500, 2).is_err());
    }

    #[test]
    fn higher_k1_matches_standard() {
        let a = nu_higher(&bilinear(), &[1], 2, 300, 4).unwrap();
        let b = nu_coefficient(&bilinear(), 1, 2, 300, 4).unwrap();
        assert_eq!(a.estimate, b.estimate);
    }

    #[test]
    fn bilinear_values() {
        let m = bilinear();
        let batch = nu_batch(&m, &[vec![0], vec![1], vec![0, 1], vec![2]], 2, 40_000, 11).unwrap();
        for i in 0..4 {
            let e = batch.estimate(i);
            let x = e.exact.unwrap();
            assert!((e.estimate - x).abs() < 4.0 * e.se.max(1e-12), "{e:?}");
        }
        let pair = batch.estimate(2);
        assert!(pair.estimate > 0.1);
        // the pair residual is exactly the product term
        assert!((pair.exact.unwrap() - batch.estimate(1).exact.unwrap()).abs() < 1e-14);
        assert_eq!(batch.estimate(3).estimate, 0.0);
    }

    #[test]
    fn coupled_is_root_two_times_standard() {
        let m = bilinear();
        for j in [0, 1] {
            let c = nu_coupled(&m, j, 2, 30_000, 3).unwrap();
            let s = nu_exact(&m, &[j], 2).unwrap();
            assert!((c.estimate - 2f64.sqrt() * s).abs() < 4.0 * c.se);
        }
    }
}
