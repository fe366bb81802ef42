use std::f64::consts::PI;

use num_complex::Complex64;

use super::model::{ModelKind, ProcessModel};
use crate::error::{Error, Result};
use crate::hilbert::HSOp;

/// Closed-form lag-`h` covariance `C_h = E X_h ⊗ X_0`.
pub fn true_cov(model: &ProcessModel, h: i64) -> Result<HSOp> {
    if h < 0 {
        return Ok(true_cov(model, -h)?.adjoint());
    }
    let h = h as usize;
    let c_eps = model.noise().effective_covariance();
    let g = model.grid();
    match model.kind() {
        ModelKind::White => Ok(if h == 0 { c_eps } else { HSOp::zeros(g) }),
        ModelKind::Far1 { rho } => {
            let c0 = far1_c0(rho, &c_eps)?;
            let mut c = c0;
            for _ in 0..h {
                c = rho.compose(&c)?;
            }
            if h == 0 {
                c = c.symmetrize();
            }
            Ok(c)
        }
        ModelKind::Maq { b } => {
            let mut c = HSOp::zeros(g);
            for j in 0..b.len() {
                if j + h < b.len() {
                    c = c.add(&b[j + h].compose(&c_eps)?.compose(&b[j].adjoint())?)?;
                }
            }
            if h == 0 {
                c = c.symmetrize();
            }
            Ok(c)
        }
        ModelKind::Bilinear1 { .. } => Err(Error::NoClosedForm("bilinear1 covariance".into())),
    }
}

/// `C_0 = Σ_k ρ^k C_ε ρ^{k†}`, stopped once the increment is below 1e-12.
fn far1_c0(rho: &HSOp, c_eps: &HSOp) -> Result<HSOp> {
    let mut term = c_eps.clone();
    let mut sum = c_eps.clone();
    let rho_adj = rho.adjoint();
    for _ in 0..100_000 {
        term = rho.compose(&term)?.compose(&rho_adj)?;
        sum = sum.add(&term)?;
        if term.hs_norm() < 1e-12 {
            return Ok(sum.symmetrize());
        }
    }
    Err(Error::NonStationary(rho.op_norm()))
}

/// Closed-form spectral density operator `F^λ`.
pub fn true_sdo(model: &ProcessModel, lambda: f64) -> Result<HSOp> {
    let c_eps = model.noise().effective_covariance();
    let g = model.grid();
    let inv2pi = 1.0 / (2.0 * PI);
    let f = match model.kind() {
        ModelKind::White => c_eps.scale_real(inv2pi),
        ModelKind::Far1 { rho } => {
            let z = Complex64::from_polar(1.0, -lambda);
            let res = HSOp::identity(g).sub(&rho.scale(z))?.inverse()?;
            res.compose(&c_eps)?.compose(&res.adjoint())?.scale_real(inv2pi)
        }
        ModelKind::Maq { b } => {
            let mut bl = HSOp::zeros(g);
            for (j, op) in b.iter().enumerate() {
                bl = bl.add(&op.scale(Complex64::from_polar(1.0, -lambda * j as f64)))?;
            }
            bl.compose(&c_eps)?.compose(&bl.adjoint())?.scale_real(inv2pi)
        }
        ModelKind::Bilinear1 { .. } => return Err(Error::NoClosedForm("bilinear1 spectral density".into())),
    };
    Ok(f.symmetrize())
}

/// `(1/2π) Σ_{|h|≤H} C_h e^{−iλh}`: the truncated lag series.
pub fn sdo_lag_series(model: &ProcessModel, lambda: f64, max_lag: usize) -> Result<HSOp> {
    let mut f = true_cov(model, 0)?;
    for h in 1..=max_lag as i64 {
        let c = true_cov(model, h)?;
        f = f.add(&c.scale(Complex64::from_polar(1.0, -lambda * h as f64)))?;
        f = f.add(&c.adjoint().scale(Complex64::from_polar(1.0, lambda * h as f64)))?;
    }
    Ok(f.scale_real(1.0 / (2.0 * PI)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::Grid;
    use crate::processes::model::{NoiseDistribution, NoiseModel};

    fn ar1() -> ProcessModel {
        ProcessModel::scalar_ar1(0.5, 1.0, NoiseDistribution::Gaussian).unwrap()
    }

    #[test]
    fn scalar_ar1_covariances() {
        let m = ar1();
        assert!((true_cov(&m, 0).unwrap().kernel()[(0, 0)].re - 4.0 / 3.0).abs() < 1e-11);
        assert!((true_cov(&m, 1).unwrap().kernel()[(0, 0)].re - 2.0 / 3.0).abs() < 1e-11);
        assert!((true_cov(&m, -2).unwrap().kernel()[(0, 0)].re - 1.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn scalar_ar1_spectrum() {
        let m = ar1();
        let f0 = true_sdo(&m, 0.0).unwrap().kernel()[(0, 0)];
        assert!((f0.re - 2.0 / PI).abs() < 1e-12 && f0.im.abs() < 1e-15);
        for lam in [0.3, 1.0, 2.5, PI] {
            let want = 1.0 / (2.0 * PI * (1.0 - Complex64::from_polar(0.5, -lam)).norm_sqr());
            assert!((true_sdo(&m, lam).unwrap().kernel()[(0, 0)].re - want).abs() < 1e-12);
        }
    }

    #[test]
    fn white_is_flat() {
        let g = Grid::uniform(8).unwrap();
        let noise = NoiseModel::fourier(&g, &[1.0, 0.4], NoiseDistribution::Gaussian).unwrap();
        let m = ProcessModel::white(noise.clone());
        let want = noise.covariance().scale_real(1.0 / (2.0 * PI));
        for lam in [0.0, 1.0, PI] {
            assert!(true_sdo(&m, lam).unwrap().sub(&want).unwrap().hs_norm() < 1e-14);
        }
        assert!(true_cov(&m, 1).unwrap().hs_norm() == 0.0);
    }

    #[test]
    fn far1_recursion_and_lag_series() {
        let g = Grid::uniform(12).unwrap();
        let noise = NoiseModel::fourier(&g, &[1.0, 0.5, 0.25], NoiseDistribution::Gaussian).unwrap();
        let k = HSOp::from_real_fn(&g, |x, y| (-(x - y).powi(2) / 0.1).exp());
        let rho = k.scale_real(0.5 / k.op_norm());
        let m = ProcessModel::far1(rho.clone(), noise).unwrap();
        let c2 = true_cov(&m, 2).unwrap();
        let c1 = true_cov(&m, 1).unwrap();
        assert!(c2.sub(&rho.compose(&c1).unwrap()).unwrap().hs_norm() < 1e-14);
        for lam in [0.0, PI / 3.0, PI] {
            let exact = true_sdo(&m, lam).unwrap();
            let series = sdo_lag_series(&m, lam, 60).unwrap();
            assert!(exact.sub(&series).unwrap().hs_norm() < 1e-8);
            let (vals, _) = exact.hermitian_eigen();
            assert!(*vals.last().unwrap() > -1e-10);
        }
    }

    #[test]
    fn maq_spectrum_matches_lag_series() {
        let g = Grid::uniform(6).unwrap();
        let noise = NoiseModel::fourier(&g, &[1.0, 0.5], NoiseDistribution::Gaussian).unwrap();
        let b = vec![
            HSOp::identity(&g),
            HSOp::from_real_fn(&g, |x, y| 0.4 * x * y),
            HSOp::from_real_fn(&g, |x, y| 0.2 * (x - y)),
        ];
        let m = ProcessModel::maq(b, noise).unwrap();
        assert!(true_cov(&m, 3).unwrap().hs_norm() == 0.0);
        for lam in [0.0, 0.7, 2.0] {
            let d = true_sdo(&m, lam).unwrap().sub(&sdo_lag_series(&m, lam, 2).unwrap()).unwrap();
            assert!(d.hs_norm() < 1e-12);
        }
    }
}
