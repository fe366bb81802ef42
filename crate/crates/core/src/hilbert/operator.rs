use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::function::GridFn;
use super::grid::{check_same, Grid};
use crate::error::{Error, Result};

/// Tolerance used when a Hermitian hint is verified.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Kernel operator on the discretised space.
///
/// `(A g)(x) = Σ_y K(x,y) w_y g(y)`. The identity is the diagonal kernel
/// `1/w_i`, so its Hilbert-Schmidt norm grows like `√P`.
#[derive(Debug, Clone, PartialEq)]
pub struct HSOp {
    grid: Arc<Grid>,
    kernel: DMatrix<Complex64>,
    hermitian_hint: bool,
}

impl HSOp {
    pub fn new(grid: Arc<Grid>, kernel: DMatrix<Complex64>) -> Result<Self> {
        let p = grid.len();
        if kernel.nrows() != p || kernel.ncols() != p {
            return Err(Error::Dimension(format!(
                "kernel {}x{} on a grid of {p} points",
                kernel.nrows(),
                kernel.ncols()
            )));
        }
        if kernel.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite kernel entry".into()));
        }
        Ok(HSOp { grid, kernel, hermitian_hint: false })
    }

    pub(crate) fn from_kernel_unchecked(grid: Arc<Grid>, kernel: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(kernel.nrows(), grid.len());
        HSOp { grid, kernel, hermitian_hint: false }
    }

    /// Build from a real kernel given row-major.
    pub fn from_real_rows(grid: Arc<Grid>, rows: &[f64]) -> Result<Self> {
        let p = grid.len();
        if rows.len() != p * p {
            return Err(Error::Dimension(format!("{} entries for a {p}x{p} kernel", rows.len())));
        }
        let kernel = DMatrix::from_fn(p, p, |i, j| Complex64::new(rows[i * p + j], 0.0));
        HSOp::new(grid, kernel)
    }

    pub fn from_real_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let x = grid.points();
        let p = x.len();
        let kernel = DMatrix::from_fn(p, p, |i, j| Complex64::new(f(x[i], x[j]), 0.0));
        HSOp::from_kernel_unchecked(grid.clone(), kernel)
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        let p = grid.len();
        HSOp { grid: grid.clone(), kernel: DMatrix::zeros(p, p), hermitian_hint: true }
    }

    pub fn identity(grid: &Arc<Grid>) -> Self {
        let w = grid.weights();
        let kernel = DMatrix::from_diagonal(&DVector::from_iterator(
            w.len(),
            w.iter().map(|w| Complex64::new(1.0 / w, 0.0)),
        ));
        HSOp { grid: grid.clone(), kernel, hermitian_hint: true }
    }

    /// Diagonal multiplication operator `g ↦ m·g`.
    pub fn multiplication(m: &GridFn) -> Self {
        let w = m.grid().weights();
        let kernel = DMatrix::from_diagonal(&DVector::from_iterator(
            w.len(),
            m.values().iter().zip(w).map(|(v, w)| v / w),
        ));
        HSOp::from_kernel_unchecked(m.grid().clone(), kernel)
    }

    /// `Σ_i c_i f_i ⊗ f_i` for the given functions and coefficients.
    pub fn spectral(grid: &Arc<Grid>, coeffs: &[f64], funcs: &[GridFn]) -> Result<Self> {
        if coeffs.len() != funcs.len() {
            return Err(Error::Dimension("coefficient/function count mismatch".into()));
        }
        let mut out = HSOp::zeros(grid);
        for (c, f) in coeffs.iter().zip(funcs) {
            check_same(grid, f.grid())?;
            out.kernel += f.values() * f.values().adjoint() * Complex64::new(*c, 0.0);
        }
        out.hermitian_hint = false;
        Ok(out.symmetrize())
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn kernel(&self) -> &DMatrix<Complex64> {
        &self.kernel
    }

    pub fn into_kernel(self) -> DMatrix<Complex64> {
        self.kernel
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    pub fn hermitian_hint(&self) -> bool {
        self.hermitian_hint
    }

    /// Mark the operator as Hermitian after checking the defect.
    pub fn with_hermitian_hint(mut self) -> Result<Self> {
        let d = self.hermitian_defect();
        if d > HERMITIAN_TOL {
            return Err(Error::NotHermitian(d));
        }
        self.hermitian_hint = true;
        Ok(self)
    }

    /// Replace by `(A + A†)/2` and set the hint.
    pub fn symmetrize(mut self) -> Self {
        let adj = self.kernel.adjoint();
        self.kernel = (&self.kernel + adj) * Complex64::new(0.5, 0.0);
        self.hermitian_hint = true;
        self
    }

    /// `‖A − A†‖₂ / ‖A‖₂` (zero for the zero operator).
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.hs_norm();
        if n == 0.0 {
            return 0.0;
        }
        let diff = HSOp::from_kernel_unchecked(self.grid.clone(), &self.kernel - self.kernel.adjoint());
        diff.hs_norm() / n
    }

    pub fn apply(&self, g: &GridFn) -> Result<GridFn> {
        check_same(&self.grid, g.grid())?;
        let wg = DVector::from_iterator(
            g.len(),
            g.values().iter().zip(self.grid.weights()).map(|(v, w)| v * *w),
        );
        Ok(GridFn::from_vector_unchecked(self.grid.clone(), &self.kernel * wg))
    }

    /// `K_A W K_B`.
    pub fn compose(&self, other: &HSOp) -> Result<HSOp> {
        check_same(&self.grid, &other.grid)?;
        Ok(HSOp::from_kernel_unchecked(self.grid.clone(), self.weighted_cols() * &other.kernel))
    }

    /// `K_A W`, the matrix acting on value vectors.
    pub fn weighted_cols(&self) -> DMatrix<Complex64> {
        let mut m = self.kernel.clone();
        for (j, w) in self.grid.weights().iter().enumerate() {
            m.column_mut(j).scale_mut(*w);
        }
        m
    }

    pub fn adjoint(&self) -> HSOp {
        HSOp {
            grid: self.grid.clone(),
            kernel: self.kernel.adjoint(),
            hermitian_hint: self.hermitian_hint,
        }
    }

    /// Conjugate operator `g ↦ conj(A conj(g))`.
    pub fn conj_op(&self) -> HSOp {
        HSOp {
            grid: self.grid.clone(),
            kernel: self.kernel.map(|v| v.conj()),
            hermitian_hint: self.hermitian_hint,
        }
    }

    pub fn add(&self, other: &HSOp) -> Result<HSOp> {
        check_same(&self.grid, &other.grid)?;
        Ok(HSOp::from_kernel_unchecked(self.grid.clone(), &self.kernel + &other.kernel))
    }

    pub fn sub(&self, other: &HSOp) -> Result<HSOp> {
        check_same(&self.grid, &other.grid)?;
        Ok(HSOp::from_kernel_unchecked(self.grid.clone(), &self.kernel - &other.kernel))
    }

    pub fn scale(&self, c: Complex64) -> HSOp {
        HSOp::from_kernel_unchecked(self.grid.clone(), &self.kernel * c)
    }

    pub fn scale_real(&self, c: f64) -> HSOp {
        HSOp {
            grid: self.grid.clone(),
            kernel: &self.kernel * Complex64::new(c, 0.0),
            hermitian_hint: self.hermitian_hint,
        }
    }

    /// `√w_i K_ij √w_j`; its matrix spectrum is the operator spectrum.
    pub fn symmetric_matrix(&self) -> DMatrix<Complex64> {
        let s: Vec<f64> = self.grid.weights().iter().map(|w| w.sqrt()).collect();
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| self.kernel[(i, j)] * (s[i] * s[j]))
    }

    /// Inverse of the matrix form mapped back to a kernel: `(K W)⁻¹ W⁻¹`.
    pub fn inverse(&self) -> Result<HSOp> {
        let m = self.weighted_cols();
        let inv = m.try_inverse().ok_or(Error::Singular)?;
        let mut k = inv;
        for (j, w) in self.grid.weights().iter().enumerate() {
            k.column_mut(j).scale_mut(1.0 / w);
        }
        if k.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Singular);
        }
        Ok(HSOp::from_kernel_unchecked(self.grid.clone(), k))
    }

    /// Non-negative integer power.
    pub fn pow(&self, n: usize) -> HSOp {
        let mut out = HSOp::identity(&self.grid);
        out.hermitian_hint = false;
        for _ in 0..n {
            out = out.compose(self).expect("same grid");
        }
        out
    }

    pub fn hs_norm_sqr(&self) -> f64 {
        let w = self.grid.weights();
        let p = self.dim();
        let mut acc = 0.0;
        for j in 0..p {
            let col = self.kernel.column(j);
            let mut c = 0.0;
            for i in 0..p {
                c += w[i] * col[i].norm_sqr();
            }
            acc += w[j] * c;
        }
        acc
    }

    /// `(Σ w_i w_j |A_ij|²)^{1/2}`.
    pub fn hs_norm(&self) -> f64 {
        self.hs_norm_sqr().sqrt()
    }

    /// `Σ w_i A_ii`.
    pub fn trace(&self) -> Complex64 {
        self.grid
            .weights()
            .iter()
            .enumerate()
            .map(|(i, w)| self.kernel[(i, i)] * *w)
            .sum()
    }

    /// Largest singular value of the weighted kernel.
    pub fn op_norm(&self) -> f64 {
        let m = self.symmetric_matrix();
        m.singular_values().iter().cloned().fold(0.0, f64::max)
    }

    /// Sum of singular values.
    pub fn trace_norm(&self) -> f64 {
        self.symmetric_matrix().singular_values().iter().sum()
    }

    /// `trace(A B†) = Σ w_i w_j A_ij conj(B_ij)`.
    pub fn hs_inner(&self, other: &HSOp) -> Result<Complex64> {
        check_same(&self.grid, &other.grid)?;
        let w = self.grid.weights();
        let p = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..p {
            for i in 0..p {
                acc += self.kernel[(i, j)] * other.kernel[(i, j)].conj() * (w[i] * w[j]);
            }
        }
        Ok(acc)
    }

    /// `⟨A, u⊗v⟩_S = ⟨A v, u⟩`.
    pub fn project(&self, u: &GridFn, v: &GridFn) -> Result<Complex64> {
        self.apply(v)?.inner(u)
    }

    /// Eigenpairs of a Hermitian operator, eigenvalues descending.
    ///
    /// Solved on `√w K √w`; eigenfunctions are returned as quadrature-
    /// orthonormal value vectors (columns). Real symmetric kernels use the
    /// real solver so that eigenfunctions come out real.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let p = self.dim();
        let m = self.symmetric_matrix();
        let m = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let (vals, vecs): (Vec<f64>, DMatrix<Complex64>) = if m.iter().all(|v| v.im == 0.0) {
            let eig = nalgebra::SymmetricEigen::new(m.map(|v| v.re));
            (eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors.map(|v| Complex64::new(v, 0.0)))
        } else {
            let eig = nalgebra::SymmetricEigen::new(m);
            (eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors)
        };
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|a, b| vals[*b].total_cmp(&vals[*a]));
        let inv_sqrt: Vec<f64> = self.grid.weights().iter().map(|w| 1.0 / w.sqrt()).collect();
        let sorted_vals = order.iter().map(|&k| vals[k]).collect();
        let funcs = DMatrix::from_fn(p, p, |i, k| vecs[(i, order[k])] * inv_sqrt[i]);
        (sorted_vals, funcs)
    }

    /// Real and imaginary parts as separate operators' HS norms.
    pub fn real_imag_norms(&self) -> (f64, f64) {
        let re = HSOp::from_kernel_unchecked(self.grid.clone(), self.kernel.map(|v| Complex64::new(v.re, 0.0)));
        let im = HSOp::from_kernel_unchecked(self.grid.clone(), self.kernel.map(|v| Complex64::new(v.im, 0.0)));
        (re.hs_norm(), im.hs_norm())
    }
}

/// Kernel `f(x) conj(g(y))`, so that `(f⊗g)v = ⟨v,g⟩ f`.
pub fn tensor(f: &GridFn, g: &GridFn) -> Result<HSOp> {
    check_same(f.grid(), g.grid())?;
    Ok(HSOp::from_kernel_unchecked(f.grid().clone(), f.values() * g.values().adjoint()))
}

pub fn apply(a: &HSOp, g: &GridFn) -> Result<GridFn> {
    a.apply(g)
}

pub fn compose(a: &HSOp, b: &HSOp) -> Result<HSOp> {
    a.compose(b)
}

pub fn adjoint(a: &HSOp) -> HSOp {
    a.adjoint()
}

pub fn conj_op(a: &HSOp) -> HSOp {
    a.conj_op()
}

pub fn hs_norm(a: &HSOp) -> f64 {
    a.hs_norm()
}

pub fn trace(a: &HSOp) -> Complex64 {
    a.trace()
}

pub fn op_norm(a: &HSOp) -> f64 {
    a.op_norm()
}

pub fn hs_inner(a: &HSOp, b: &HSOp) -> Result<Complex64> {
    a.hs_inner(b)
}

/// `(A ⊗̃ B) C = A C B†`.
pub fn kron_apply(a: &HSOp, b: &HSOp, c: &HSOp) -> Result<HSOp> {
    check_same(a.grid(), b.grid())?;
    a.compose(c)?.compose(&b.adjoint())
}

/// `(A ⊗̃_⊤ B) C = (A ⊗̃ B̄) C̄†`.
pub fn kron_t_apply(a: &HSOp, b: &HSOp, c: &HSOp) -> Result<HSOp> {
    kron_apply(a, &b.conj_op(), &c.conj_op().adjoint())
}
