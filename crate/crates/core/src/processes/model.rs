use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution as _, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{check_same, Grid, GridFn, HSOp};

/// Law of the standardised scores in the noise expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseDistribution {
    Gaussian,
    /// Uniform on `[−√3, √3]` (unit variance).
    ScaledUniform,
}

/// Default rank cap of the noise expansion.
pub const DEFAULT_RANK_CAP: usize = 20;

/// I.i.d. innovations `ε_t = Σ_k √λ_k ξ_k φ_k` with standardised scores `ξ_k`.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    covariance: HSOp,
    distribution: NoiseDistribution,
    rank_cap: usize,
    eigenvalues: Vec<f64>,
    /// Columns `√λ_k φ_k` as value vectors.
    loadings: DMatrix<Complex64>,
}

impl NoiseModel {
    /// Build from a covariance operator via its truncated eigen-expansion.
    pub fn new(covariance: HSOp, distribution: NoiseDistribution, rank_cap: usize) -> Result<Self> {
        if rank_cap == 0 {
            return Err(Error::InvalidArgument("rank cap must be positive".into()));
        }
        let covariance = covariance.with_hermitian_hint()?;
        let (vals, vecs) = covariance.hermitian_eigen();
        let scale = vals.first().cloned().unwrap_or(0.0).abs().max(1.0);
        if let Some(neg) = vals.iter().find(|v| **v < -1e-12 * scale) {
            return Err(Error::InvalidArgument(format!("noise covariance has eigenvalue {neg:.3e} < 0")));
        }
        // eigenvalues at round-off level are clipped to zero
        let kept: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 1e-12 * scale).take(rank_cap).collect();
        let p = covariance.dim();
        let eigenvalues: Vec<f64> = kept.iter().map(|&k| vals[k]).collect();
        let loadings = DMatrix::from_fn(p, kept.len(), |i, c| vecs[(i, kept[c])] * eigenvalues[c].sqrt());
        Ok(NoiseModel { covariance, distribution, rank_cap, eigenvalues, loadings })
    }

    /// Build from explicit (orthonormal) eigenfunctions and eigenvalues.
    pub fn from_eigen(
        grid: &Arc<Grid>,
        eigenvalues: &[f64],
        funcs: &[GridFn],
        distribution: NoiseDistribution,
    ) -> Result<Self> {
        if eigenvalues.len() != funcs.len() || eigenvalues.is_empty() {
            return Err(Error::Dimension("need one eigenfunction per eigenvalue".into()));
        }
        if eigenvalues.iter().any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidArgument("noise eigenvalues must be non-negative".into()));
        }
        for f in funcs {
            check_same(grid, f.grid())?;
        }
        let covariance = HSOp::spectral(grid, eigenvalues, funcs)?;
        let p = grid.len();
        let loadings = DMatrix::from_fn(p, funcs.len(), |i, c| funcs[c].values()[i] * eigenvalues[c].sqrt());
        Ok(NoiseModel {
            covariance,
            distribution,
            rank_cap: eigenvalues.len(),
            eigenvalues: eigenvalues.to_vec(),
            loadings,
        })
    }

    /// Eigenvalues on the Fourier basis `1, √2 cos 2πx, √2 sin 2πx, ...`.
    pub fn fourier(grid: &Arc<Grid>, eigenvalues: &[f64], distribution: NoiseDistribution) -> Result<Self> {
        let funcs = fourier_basis(grid, eigenvalues.len());
        NoiseModel::from_eigen(grid, eigenvalues, &funcs, distribution)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.covariance.grid()
    }

    pub fn covariance(&self) -> &HSOp {
        &self.covariance
    }

    pub fn distribution(&self) -> NoiseDistribution {
        self.distribution
    }

    pub fn rank_cap(&self) -> usize {
        self.rank_cap
    }

    pub fn rank(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn loadings(&self) -> &DMatrix<Complex64> {
        &self.loadings
    }

    /// Covariance of what is actually sampled: the truncated reconstruction.
    pub fn effective_covariance(&self) -> HSOp {
        let k = &self.loadings * self.loadings.adjoint();
        HSOp::new(self.grid().clone(), k).expect("finite kernel").symmetrize()
    }

    /// Standardised scores for one innovation.
    pub fn draw_scores<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match self.distribution {
            NoiseDistribution::Gaussian => {
                for x in out.iter_mut() {
                    *x = StandardNormal.sample(rng);
                }
            }
            NoiseDistribution::ScaledUniform => {
                let s = 3f64.sqrt();
                let u = Uniform::new_inclusive(-s, s).expect("valid bounds");
                for x in out.iter_mut() {
                    *x = u.sample(rng);
                }
            }
        }
    }

    /// One innovation as a value vector.
    pub fn sample_values<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<Complex64> {
        let mut z = vec![0.0; self.rank()];
        self.draw_scores(rng, &mut z);
        self.combine(&z)
    }

    pub(crate) fn combine(&self, z: &[f64]) -> DVector<Complex64> {
        let mut v = DVector::zeros(self.loadings.nrows());
        for (c, zc) in z.iter().enumerate() {
            v.axpy(Complex64::new(*zc, 0.0), &self.loadings.column(c), Complex64::new(1.0, 0.0));
        }
        v
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> GridFn {
        GridFn::from_vector_unchecked(self.grid().clone(), self.sample_values(rng))
    }
}

/// `1, √2 cos 2πx, √2 sin 2πx, √2 cos 4πx, ...` evaluated on the grid.
pub fn fourier_basis(grid: &Arc<Grid>, count: usize) -> Vec<GridFn> {
    (0..count)
        .map(|k| {
            let m = k.div_ceil(2) as f64;
            GridFn::from_real_fn(grid, move |x| match k {
                0 => 1.0,
                _ if k % 2 == 1 => 2f64.sqrt() * (2.0 * PI * m * x).cos(),
                _ => 2f64.sqrt() * (2.0 * PI * m * x).sin(),
            })
        })
        .collect()
}

/// Generative structure of the series.
#[derive(Debug, Clone)]
pub enum ModelKind {
    White,
    /// `X_t = ρ X_{t−1} + ε_t`.
    Far1 { rho: HSOp },
    /// `X_t = Σ_{j=0}^{q} b_j ε_{t−j}`.
    Maq { b: Vec<HSOp> },
    /// `X_t = a(ε_t) + c(ε_{t−1}) ⊙ ε_t`.
    Bilinear1 { a: HSOp, c: HSOp },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::White => "white",
            ModelKind::Far1 { .. } => "far1",
            ModelKind::Maq { .. } => "maq",
            ModelKind::Bilinear1 { .. } => "bilinear1",
        }
    }
}

/// A validated process model with cached matrix forms.
#[derive(Debug, Clone)]
pub struct ProcessModel {
    kind: ModelKind,
    noise: NoiseModel,
    /// Value-vector matrices `K W` of the model operators.
    mats: Vec<DMatrix<Complex64>>,
    rho_norm: f64,
}

impl ProcessModel {
    pub fn new(kind: ModelKind, noise: NoiseModel) -> Result<Self> {
        let grid = noise.grid().clone();
        let mut rho_norm = 0.0;
        let mats = match &kind {
            ModelKind::White => vec![],
            ModelKind::Far1 { rho } => {
                check_same(&grid, rho.grid())?;
                rho_norm = rho.op_norm();
                if rho_norm >= 1.0 {
                    return Err(Error::NonStationary(rho_norm));
                }
                vec![rho.weighted_cols()]
            }
            ModelKind::Maq { b } => {
                if b.is_empty() {
                    return Err(Error::InvalidArgument("maq needs at least b_0".into()));
                }
                for op in b {
                    check_same(&grid, op.grid())?;
                }
                b.iter().map(|op| op.weighted_cols()).collect()
            }
            ModelKind::Bilinear1 { a, c } => {
                check_same(&grid, a.grid())?;
                check_same(&grid, c.grid())?;
                vec![a.weighted_cols(), c.weighted_cols()]
            }
        };
        Ok(ProcessModel { kind, noise, mats, rho_norm })
    }

    pub fn white(noise: NoiseModel) -> Self {
        ProcessModel::new(ModelKind::White, noise).expect("white model is always valid")
    }

    pub fn far1(rho: HSOp, noise: NoiseModel) -> Result<Self> {
        ProcessModel::new(ModelKind::Far1 { rho }, noise)
    }

    pub fn maq(b: Vec<HSOp>, noise: NoiseModel) -> Result<Self> {
        ProcessModel::new(ModelKind::Maq { b }, noise)
    }

    pub fn bilinear1(a: HSOp, c: HSOp, noise: NoiseModel) -> Result<Self> {
        ProcessModel::new(ModelKind::Bilinear1 { a, c }, noise)
    }

    /// Scalar AR(1) on the one-point grid: `X_t = ρ X_{t−1} + σ ε_t`.
    pub fn scalar_ar1(rho: f64, sigma2: f64, distribution: NoiseDistribution) -> Result<Self> {
        let g = Grid::uniform(1)?;
        let noise = NoiseModel::fourier(&g, &[sigma2], distribution)?;
        ProcessModel::far1(HSOp::identity(&g).scale_real(rho), noise)
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.noise.grid()
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub(crate) fn mats(&self) -> &[DMatrix<Complex64>] {
        &self.mats
    }

    /// Operator norm of `ρ` for far1, zero otherwise.
    pub fn rho_norm(&self) -> f64 {
        self.rho_norm
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self.kind, ModelKind::Bilinear1 { .. })
    }

    /// Number of past innovations `X_0` depends on, `None` when unbounded.
    pub fn memory(&self) -> Option<usize> {
        match &self.kind {
            ModelKind::White => Some(0),
            ModelKind::Far1 { rho } if rho.hs_norm() == 0.0 => Some(0),
            ModelKind::Far1 { .. } => None,
            ModelKind::Maq { b } => Some(b.len() - 1),
            ModelKind::Bilinear1 { .. } => Some(1),
        }
    }

    pub fn default_burn_in(&self) -> usize {
        match &self.kind {
            ModelKind::White => 0,
            ModelKind::Far1 { .. } => (10.0 / (1.0 - self.rho_norm)).ceil() as usize,
            ModelKind::Maq { b } => b.len() - 1,
            ModelKind::Bilinear1 { .. } => 1,
        }
    }

    /// Moving-average coefficient `ψ_j` of a linear model.
    pub fn psi(&self, j: usize) -> Result<HSOp> {
        let g = self.grid();
        match &self.kind {
            ModelKind::White => Ok(if j == 0 { HSOp::identity(g) } else { HSOp::zeros(g) }),
            ModelKind::Far1 { rho } => Ok(rho.pow(j)),
            ModelKind::Maq { b } => Ok(b.get(j).cloned().unwrap_or_else(|| HSOp::zeros(g))),
            ModelKind::Bilinear1 { .. } => Err(Error::Unsupported("bilinear1 has no linear representation".into())),
        }
    }

    /// Value-vector matrices of `ψ_0..ψ_n`.
    pub(crate) fn psi_mats(&self, n: usize) -> Result<Vec<DMatrix<Complex64>>> {
        let p = self.grid().len();
        let eye = DMatrix::<Complex64>::identity(p, p);
        match &self.kind {
            ModelKind::White => Ok((0..=n).map(|j| if j == 0 { eye.clone() } else { DMatrix::zeros(p, p) }).collect()),
            ModelKind::Far1 { .. } => {
                let mut out = Vec::with_capacity(n + 1);
                let mut cur = eye;
                for _ in 0..=n {
                    let next = &self.mats[0] * &cur;
                    out.push(cur);
                    cur = next;
                }
                Ok(out)
            }
            ModelKind::Maq { .. } => {
                Ok((0..=n).map(|j| self.mats.get(j).cloned().unwrap_or_else(|| DMatrix::zeros(p, p))).collect())
            }
            ModelKind::Bilinear1 { .. } => Err(Error::Unsupported("bilinear1 has no linear representation".into())),
        }
    }
}
