use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;

use super::grid::{check_same, Grid};
use crate::error::{Error, Result};

/// Complex function sampled on a quadrature grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFn {
    grid: Arc<Grid>,
    values: DVector<Complex64>,
}

impl GridFn {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        Self::from_vector(grid, DVector::from_vec(values))
    }

    pub fn from_vector(grid: Arc<Grid>, values: DVector<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} values on a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite function value".into()));
        }
        Ok(GridFn { grid, values })
    }

    pub(crate) fn from_vector_unchecked(grid: Arc<Grid>, values: DVector<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        GridFn { grid, values }
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        GridFn { grid: grid.clone(), values: DVector::zeros(grid.len()) }
    }

    pub fn constant(grid: &Arc<Grid>, c: Complex64) -> Self {
        GridFn { grid: grid.clone(), values: DVector::from_element(grid.len(), c) }
    }

    /// Evaluate a real function at the nodes.
    pub fn from_real_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        let values = grid.points().iter().map(|&x| Complex64::new(f(x), 0.0)).collect();
        GridFn { grid: grid.clone(), values: DVector::from_vec(values) }
    }

    pub fn from_complex_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().iter().map(|&x| f(x)).collect();
        GridFn { grid: grid.clone(), values: DVector::from_vec(values) }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &DVector<Complex64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Σ w_i f_i conj(g_i)`.
    pub fn inner(&self, other: &GridFn) -> Result<Complex64> {
        check_same(&self.grid, &other.grid)?;
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &GridFn) -> Complex64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .zip(self.grid.weights())
            .map(|((a, b), w)| a * b.conj() * *w)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.values
            .iter()
            .zip(self.grid.weights())
            .map(|(v, w)| v.norm_sqr() * w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn conj(&self) -> GridFn {
        GridFn { grid: self.grid.clone(), values: self.values.map(|v| v.conj()) }
    }

    pub fn scale(&self, c: Complex64) -> GridFn {
        GridFn { grid: self.grid.clone(), values: &self.values * c }
    }

    pub fn add(&self, other: &GridFn) -> Result<GridFn> {
        check_same(&self.grid, &other.grid)?;
        Ok(GridFn { grid: self.grid.clone(), values: &self.values + &other.values })
    }

    pub fn sub(&self, other: &GridFn) -> Result<GridFn> {
        check_same(&self.grid, &other.grid)?;
        Ok(GridFn { grid: self.grid.clone(), values: &self.values - &other.values })
    }

    /// Pointwise product on the grid.
    pub fn pointwise(&self, other: &GridFn) -> Result<GridFn> {
        check_same(&self.grid, &other.grid)?;
        Ok(GridFn {
            grid: self.grid.clone(),
            values: self.values.component_mul(&other.values),
        })
    }
}

/// Free-function form of [`GridFn::inner`].
pub fn inner(f: &GridFn, g: &GridFn) -> Result<Complex64> {
    f.inner(g)
}
