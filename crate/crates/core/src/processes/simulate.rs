use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::model::{ModelKind, ProcessModel};
use crate::error::{Error, Result};
use crate::hilbert::{Grid, GridFn};
use crate::rng::replicate_rng;

/// A simulated stretch `X_1..X_T` together with every innovation drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: Arc<Grid>,
    seed: u64,
    replicate: u64,
    burn_in: usize,
    /// Row `t−1` holds `X_t`.
    series: DMatrix<Complex64>,
    /// Row `r` holds `ε_{r + 1 − burn_in}`.
    innovations: DMatrix<Complex64>,
}

impl SamplePath {
    /// Wrap observed data (no innovations).
    pub fn from_series(grid: Arc<Grid>, series: DMatrix<Complex64>) -> Result<Self> {
        if series.ncols() != grid.len() {
            return Err(Error::Dimension(format!("{} columns on a {}-point grid", series.ncols(), grid.len())));
        }
        let p = grid.len();
        Ok(SamplePath { grid, seed: 0, replicate: 0, burn_in: 0, series, innovations: DMatrix::zeros(0, p) })
    }

    pub fn from_functions(grid: &Arc<Grid>, xs: &[GridFn]) -> Result<Self> {
        let p = grid.len();
        let mut m = DMatrix::zeros(xs.len(), p);
        for (t, x) in xs.iter().enumerate() {
            crate::hilbert::check_same(grid, x.grid())?;
            m.row_mut(t).copy_from(&x.values().transpose());
        }
        SamplePath::from_series(grid.clone(), m)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.series.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.series.nrows() == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replicate(&self) -> u64 {
        self.replicate
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    /// `T × P` matrix, row `t−1` is `X_t`.
    pub fn series(&self) -> &DMatrix<Complex64> {
        &self.series
    }

    pub fn innovations(&self) -> &DMatrix<Complex64> {
        &self.innovations
    }

    /// Time index of the first retained innovation.
    pub fn first_innovation_time(&self) -> i64 {
        1 - self.burn_in as i64
    }

    /// `X_t` for `1 ≤ t ≤ T`.
    pub fn x(&self, t: usize) -> GridFn {
        GridFn::from_vector_unchecked(self.grid.clone(), self.series.row(t - 1).transpose())
    }

    /// `ε_t` if retained.
    pub fn innovation(&self, t: i64) -> Option<GridFn> {
        let r = t - self.first_innovation_time();
        if r < 0 || r as usize >= self.innovations.nrows() {
            return None;
        }
        Some(GridFn::from_vector_unchecked(self.grid.clone(), self.innovations.row(r as usize).transpose()))
    }

    pub fn functions(&self) -> Vec<GridFn> {
        (1..=self.len()).map(|t| self.x(t)).collect()
    }

    pub(crate) fn with_series(&self, series: DMatrix<Complex64>) -> SamplePath {
        SamplePath { series, ..self.clone() }
    }
}

/// Simulate `T` observations on replicate stream 0.
pub fn simulate(model: &ProcessModel, t_len: usize, seed: u64) -> Result<SamplePath> {
    simulate_replicate(model, t_len, seed, 0, None)
}

/// Simulate on replicate stream `replicate`, optionally overriding the burn-in.
pub fn simulate_replicate(
    model: &ProcessModel,
    t_len: usize,
    seed: u64,
    replicate: u64,
    burn_in: Option<usize>,
) -> Result<SamplePath> {
    if t_len == 0 {
        return Err(Error::InvalidArgument("T must be at least 1".into()));
    }
    let burn_in = burn_in.unwrap_or_else(|| model.default_burn_in());
    let min_burn = model.memory().unwrap_or(0);
    if burn_in < min_burn {
        return Err(Error::InvalidArgument(format!("burn-in {burn_in} shorter than model memory {min_burn}")));
    }
    let grid = model.grid().clone();
    let p = grid.len();
    let n = burn_in + t_len;
    let mut rng = replicate_rng(seed, replicate);
    let noise = model.noise();
    let mut eps = DMatrix::zeros(n, p);
    for r in 0..n {
        let e = noise.sample_values(&mut rng);
        eps.row_mut(r).copy_from(&e.transpose());
    }
    let mut series = DMatrix::zeros(t_len, p);
    let mats = model.mats();
    let row = |r: usize| -> DVector<Complex64> { eps.row(r).transpose() };
    match model.kind() {
        ModelKind::White => {
            for t in 0..t_len {
                series.row_mut(t).copy_from(&eps.row(burn_in + t));
            }
        }
        ModelKind::Far1 { .. } => {
            let mut x = DVector::<Complex64>::zeros(p);
            for r in 0..n {
                x = &mats[0] * &x + row(r);
                if r >= burn_in {
                    series.row_mut(r - burn_in).copy_from(&x.transpose());
                }
            }
        }
        ModelKind::Maq { .. } => {
            for t in 0..t_len {
                let r = burn_in + t;
                let mut x = DVector::<Complex64>::zeros(p);
                for (j, b) in mats.iter().enumerate() {
                    x += b * row(r - j);
                }
                series.row_mut(t).copy_from(&x.transpose());
            }
        }
        ModelKind::Bilinear1 { .. } => {
            for t in 0..t_len {
                let r = burn_in + t;
                let e = row(r);
                let x = &mats[0] * &e + (&mats[1] * row(r - 1)).component_mul(&e);
                series.row_mut(t).copy_from(&x.transpose());
            }
        }
    }
    Ok(SamplePath { grid, seed, replicate, burn_in, series, innovations: eps })
}
