//! Dynamic functional principal components: eigenelements of spectral
//! density operators and their consistency diagnostics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{GridFn, HSOp, HERMITIAN_TOL};

/// Leading eigenelements of a Hermitian operator at one frequency.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub lambda: f64,
    /// Full spectrum, non-increasing.
    pub spectrum: Vec<f64>,
    /// Quadrature-orthonormal eigenfunctions of the first `count` eigenvalues.
    pub eigenfunctions: Vec<GridFn>,
    pub trace: f64,
    pub hermitian_defect: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenSummary {
    pub lambda: f64,
    pub eigenvalues: Vec<f64>,
    pub gaps: Vec<f64>,
    pub trace: f64,
    pub residual_trace: f64,
    pub hermitian_defect: f64,
}

impl EigenSystem {
    pub fn count(&self) -> usize {
        self.eigenfunctions.len()
    }

    /// `β_1 ≥ … ≥ β_J`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum[..self.count()]
    }

    /// `Π_j = φ_j ⊗ φ_j` (zero-based `j`).
    pub fn projector(&self, j: usize) -> Result<HSOp> {
        let f = self
            .eigenfunctions
            .get(j)
            .ok_or_else(|| Error::InvalidArgument(format!("eigen index {j} out of range")))?;
        Ok(crate::hilbert::tensor(f, f)?.symmetrize())
    }

    /// `trace − Σ_{j≤J} β_j`, the mass not carried by the retained components.
    pub fn residual_trace(&self) -> f64 {
        self.trace - self.eigenvalues().iter().sum::<f64>()
    }

    pub fn summary(&self) -> EigenSummary {
        EigenSummary {
            lambda: self.lambda,
            eigenvalues: self.eigenvalues().to_vec(),
            gaps: (0..self.count()).map(|j| eigengap(self, j).unwrap_or(0.0)).collect(),
            trace: self.trace,
            residual_trace: self.residual_trace(),
            hermitian_defect: self.hermitian_defect,
        }
    }
}

/// Eigendecomposition keeping the leading `count` eigenfunctions.
pub fn eigendecompose(a: &HSOp, count: usize, lambda: f64) -> Result<EigenSystem> {
    let defect = a.hermitian_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    if count > a.dim() {
        return Err(Error::InvalidArgument(format!("{count} components requested from a {}-point grid", a.dim())));
    }
    let (spectrum, funcs) = a.hermitian_eigen();
    let eigenfunctions = (0..count)
        .map(|j| GridFn::from_vector_unchecked(a.grid().clone(), funcs.column(j).into_owned()))
        .collect();
    Ok(EigenSystem { lambda, spectrum, eigenfunctions, trace: a.trace().re, hermitian_defect: defect })
}

/// `‖Π̂_j − Π_j‖₂`; invariant under rotation of eigenfunctions.
pub fn projector_error(est: &EigenSystem, truth: &EigenSystem, j: usize) -> Result<f64> {
    Ok(est.projector(j)?.sub(&truth.projector(j)?)?.hs_norm())
}

/// `min_{l≠j} |β_j − β_l|` over the full spectrum.
pub fn eigengap(sys: &EigenSystem, j: usize) -> Result<f64> {
    if j >= sys.spectrum.len() {
        return Err(Error::InvalidArgument(format!("eigen index {j} out of range")));
    }
    let bj = sys.spectrum[j];
    Ok(sys
        .spectrum
        .iter()
        .enumerate()
        .filter(|(l, _)| *l != j)
        .map(|(_, b)| (bj - b).abs())
        .fold(f64::INFINITY, f64::min))
}

/// `sup_j |β̂_j − β_j|` over the full spectra.
pub fn eigenvalue_deviation(est: &EigenSystem, truth: &EigenSystem) -> f64 {
    est.spectrum.iter().zip(&truth.spectrum).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Grid;
    use crate::processes::{true_sdo, NoiseDistribution, NoiseModel, ProcessModel};
    use num_complex::Complex64;

    /// Cyclic Jacobi on a real symmetric matrix; returns sorted eigenvalues.
    fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
        let n = a.len();
        for _ in 0..100 {
            let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |j| *j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if a[p][q].abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let (akp, akq) = (a[k][p], a[k][q]);
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let (apk, aqk) = (a[p][k], a[q][k]);
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut d: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
        d.sort_by(|x, y| y.total_cmp(x));
        d
    }

    /// Eigenvalues of `√w K √w` via the real `2P` embedding; each appears twice.
    fn oracle_spectrum(a: &HSOp) -> Vec<f64> {
        let p = a.dim();
        let w = a.grid().weights();
        let m = |i: usize, j: usize| a.kernel()[(i, j)] * (w[i] * w[j]).sqrt();
        let mut big = vec![vec![0.0; 2 * p]; 2 * p];
        for i in 0..p {
            for j in 0..p {
                let z = 0.5 * (m(i, j) + m(j, i).conj());
                big[i][j] = z.re;
                big[i + p][j + p] = z.re;
                big[i][j + p] = -z.im;
                big[i + p][j] = z.im;
            }
        }
        jacobi_eigenvalues(big).chunks(2).map(|c| 0.5 * (c[0] + c[1])).collect()
    }

    fn far1_truth(lambda: f64) -> HSOp {
        let g = Grid::uniform(10).unwrap();
        let noise = NoiseModel::fourier(&g, &[1.0, 0.5, 0.25], NoiseDistribution::Gaussian).unwrap();
        let k = HSOp::from_real_fn(&g, |x, y| (-(x - y).powi(2) / 0.18).exp());
        let rho = k.scale_real(0.5 / k.op_norm());
        true_sdo(&ProcessModel::far1(rho, noise).unwrap(), lambda).unwrap()
    }

    #[test]
    fn rank_one() {
        let g = Grid::uniform(7).unwrap();
        let f = GridFn::from_real_fn(&g, |x| (2.0 * std::f64::consts::PI * x).cos());
        let f = f.scale(Complex64::new(1.0 / f.norm(), 0.0));
        let a = crate::hilbert::tensor(&f, &f).unwrap();
        let sys = eigendecompose(&a, 2, 0.0).unwrap();
        assert!((sys.spectrum[0] - 1.0).abs() < 1e-12);
        assert!(sys.spectrum[1..].iter().all(|b| b.abs() < 1e-12));
        assert!(sys.projector(0).unwrap().sub(&a).unwrap().hs_norm() < 1e-12);
        assert!((eigengap(&sys, 0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_like() {
        let g = Grid::uniform(5).unwrap();
        let id = HSOp::identity(&g);
        let sys = eigendecompose(&id, 5, 0.0).unwrap();
        assert!(sys.spectrum.iter().all(|b| (b - 1.0).abs() < 1e-12));
        assert!(eigengap(&sys, 2).unwrap() < 1e-12);
        let mut sum = HSOp::zeros(&g);
        for j in 0..5 {
            sum = sum.add(&sys.projector(j).unwrap()).unwrap();
        }
        assert!(sum.sub(&id).unwrap().hs_norm() < 1e-10);
    }

    #[test]
    fn orthonormal_and_trace() {
        let f = far1_truth(1.0);
        let sys = eigendecompose(&f, 4, 1.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let ip = sys.eigenfunctions[i].inner(&sys.eigenfunctions[j]).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((ip - want).norm() < 1e-8);
            }
            let pi = sys.projector(i).unwrap();
            assert!(pi.compose(&pi).unwrap().sub(&pi).unwrap().hs_norm() < 1e-8);
        }
        assert!((sys.spectrum.iter().sum::<f64>() - sys.trace).abs() < 1e-8);
        assert!(sys.projector(0).unwrap().compose(&sys.projector(1).unwrap()).unwrap().hs_norm() < 1e-8);
    }

    #[test]
    fn matches_jacobi_oracle() {
        for lambda in [0.0, 0.8] {
            let f = far1_truth(lambda);
            let sys = eigendecompose(&f, 3, lambda).unwrap();
            let oracle = oracle_spectrum(&f);
            for (a, b) in sys.spectrum.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10, "{a} vs {b}");
            }
            // rank-3 noise gives three clearly separated leading values
            for j in 0..3 {
                let gap = eigengap(&sys, j).unwrap();
                assert!(gap > 1e-4);
                let want = oracle.iter().enumerate().filter(|(l, _)| *l != j).map(|(_, b)| (oracle[j] - b).abs()).fold(f64::INFINITY, f64::min);
                assert!((gap - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn projector_error_rotation_invariant() {
        let f = far1_truth(0.5);
        let sys = eigendecompose(&f, 2, 0.5).unwrap();
        let mut rotated = sys.clone();
        rotated.eigenfunctions[0] = rotated.eigenfunctions[0].scale(Complex64::from_polar(1.0, 0.77));
        assert!(projector_error(&rotated, &sys, 0).unwrap() < 1e-12);
        assert_eq!(projector_error(&sys, &sys, 1).unwrap(), 0.0);
        assert!(projector_error(&sys, &sys, 5).is_err());
    }

    #[test]
    fn weyl_bound_on_perturbation() {
        let f = far1_truth(0.0);
        let g = f.grid().clone();
        let e = HSOp::from_real_fn(&g, |x, y| 0.01 * (x * y).sin()).symmetrize();
        let pert = f.add(&e).unwrap();
        let a = eigendecompose(&pert, 2, 0.0).unwrap();
        let b = eigendecompose(&f, 2, 0.0).unwrap();
        assert!(eigenvalue_deviation(&a, &b) <= pert.sub(&f).unwrap().hs_norm());
    }

    #[test]
    fn rejects_non_hermitian() {
        let g = Grid::uniform(4).unwrap();
        let a = HSOp::from_real_fn(&g, |x, y| x - 2.0 * y);
        assert!(matches!(eigendecompose(&a, 1, 0.0), Err(Error::NotHermitian(_))));
    }
}
