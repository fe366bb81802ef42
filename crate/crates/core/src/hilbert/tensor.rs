use std::sync::Arc;

use num_complex::Complex64;

use super::function::GridFn;
use super::grid::{check_same, Grid};
use super::operator::HSOp;
use crate::error::{Error, Result};

/// Rank-n array over the grid (row-major, every axis of length P).
#[derive(Debug, Clone, PartialEq)]
pub struct GridTensor {
    grid: Arc<Grid>,
    rank: usize,
    data: Vec<Complex64>,
}

/// Rank-four tensor.
pub type Tensor4 = GridTensor;

impl GridTensor {
    pub fn new(grid: Arc<Grid>, rank: usize, data: Vec<Complex64>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidArgument("tensor rank must be positive".into()));
        }
        let n = grid.len().pow(rank as u32);
        if data.len() != n {
            return Err(Error::Dimension(format!("{} entries, expected {n}", data.len())));
        }
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite tensor entry".into()));
        }
        Ok(GridTensor { grid, rank, data })
    }

    pub fn zeros(grid: &Arc<Grid>, rank: usize) -> Self {
        let n = grid.len().pow(rank as u32);
        GridTensor { grid: grid.clone(), rank, data: vec![Complex64::new(0.0, 0.0); n] }
    }

    /// `f_1(x_1) f_2(x_2) ... f_n(x_n)`, without conjugation.
    pub fn outer(fs: &[&GridFn]) -> Result<Self> {
        let first = fs.first().ok_or_else(|| Error::InvalidArgument("no factors".into()))?;
        for f in fs {
            check_same(first.grid(), f.grid())?;
        }
        let mut data = vec![Complex64::new(1.0, 0.0)];
        for f in fs {
            let mut next = Vec::with_capacity(data.len() * f.len());
            for a in &data {
                for b in f.values().iter() {
                    next.push(a * b);
                }
            }
            data = next;
        }
        Ok(GridTensor { grid: first.grid().clone(), rank: fs.len(), data })
    }

    /// Product of two tensors, axes of `a` first.
    pub fn outer_pair(a: &GridTensor, b: &GridTensor) -> Result<Self> {
        check_same(&a.grid, &b.grid)?;
        let mut data = Vec::with_capacity(a.data.len() * b.data.len());
        for x in &a.data {
            for y in &b.data {
                data.push(x * y);
            }
        }
        Ok(GridTensor { grid: a.grid.clone(), rank: a.rank + b.rank, data })
    }

    pub fn from_function(f: &GridFn) -> Self {
        GridTensor { grid: f.grid().clone(), rank: 1, data: f.values().iter().cloned().collect() }
    }

    /// Kernel entries as a rank-2 tensor.
    pub fn from_operator(a: &HSOp) -> Self {
        let p = a.dim();
        let mut data = Vec::with_capacity(p * p);
        for i in 0..p {
            for j in 0..p {
                data.push(a.kernel()[(i, j)]);
            }
        }
        GridTensor { grid: a.grid().clone(), rank: 2, data }
    }

    pub fn to_operator(&self) -> Result<HSOp> {
        if self.rank != 2 {
            return Err(Error::Dimension(format!("rank {} tensor is not an operator", self.rank)));
        }
        let p = self.grid.len();
        let k = nalgebra::DMatrix::from_fn(p, p, |i, j| self.data[i * p + j]);
        Ok(HSOp::from_kernel_unchecked(self.grid.clone(), k))
    }

    pub fn to_function(&self) -> Result<GridFn> {
        if self.rank != 1 {
            return Err(Error::Dimension(format!("rank {} tensor is not a function", self.rank)));
        }
        GridFn::new(self.grid.clone(), self.data.clone())
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn get(&self, idx: &[usize]) -> Complex64 {
        self.data[self.offset(idx)]
    }

    fn offset(&self, idx: &[usize]) -> usize {
        let p = self.grid.len();
        idx.iter().fold(0, |acc, i| acc * p + i)
    }

    /// Output axis `k` is input axis `perm[k]` (zero-based), so a rank-one
    /// `x_0 ⊗ ... ⊗ x_{n-1}` becomes `x_{perm[0]} ⊗ ... ⊗ x_{perm[n-1]}`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        validate_perm(perm, self.rank)?;
        let p = self.grid.len();
        let n = self.rank;
        let mut strides = vec![1usize; n];
        for k in (0..n.saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * p;
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.data.len()];
        let mut idx = vec![0usize; n];
        for (o, slot) in out.iter_mut().enumerate() {
            let mut r = o;
            for k in (0..n).rev() {
                idx[k] = r % p;
                r /= p;
            }
            let src: usize = (0..n).map(|k| idx[k] * strides[perm[k]]).sum();
            *slot = self.data[src];
        }
        Ok(GridTensor { grid: self.grid.clone(), rank: n, data: out })
    }

    pub fn add(&self, other: &GridTensor) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridTensor) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &GridTensor, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        check_same(&self.grid, &other.grid)?;
        if self.rank != other.rank {
            return Err(Error::Dimension("tensor rank mismatch".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Ok(GridTensor { grid: self.grid.clone(), rank: self.rank, data })
    }

    pub fn scale(&self, c: f64) -> Self {
        GridTensor {
            grid: self.grid.clone(),
            rank: self.rank,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        GridTensor { grid: self.grid.clone(), rank: self.rank, data: self.data.iter().map(|v| f(*v)).collect() }
    }

    /// Quadrature weights multiplied across all axes.
    pub fn hs_norm(&self) -> f64 {
        let w = self.grid.weights();
        let p = w.len();
        let mut acc = 0.0;
        for (o, v) in self.data.iter().enumerate() {
            let mut r = o;
            let mut wt = 1.0;
            for _ in 0..self.rank {
                wt *= w[r % p];
                r /= p;
            }
            acc += wt * v.norm_sqr();
        }
        acc.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

fn validate_perm(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidArgument(format!("permutation of length {} for rank {n}", perm.len())));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Inverse of a zero-based permutation.
pub fn invert_perm(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (k, &p) in perm.iter().enumerate() {
        inv[p] = k;
    }
    inv
}

/// Rank-four permutation.
pub fn permute4(t: &Tensor4, perm: [usize; 4]) -> Result<Tensor4> {
    if t.rank() != 4 {
        return Err(Error::Dimension("permute4 needs a rank-4 tensor".into()));
    }
    t.permute(&perm)
}
