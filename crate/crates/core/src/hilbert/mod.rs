//! Discretised `L²[0,1]` and its operator algebra.
//!
//! Functions live on a quadrature [`Grid`]; operators are kernels integrated
//! against the weights. Everything is immutable and cheap to share across
//! threads.

mod function;
mod grid;
pub mod io;
mod operator;
mod tensor;

pub use function::{inner, GridFn};
pub use grid::Grid;
pub use operator::{
    adjoint, apply, compose, conj_op, hs_inner, hs_norm, kron_apply, kron_t_apply, op_norm, tensor, trace,
    HSOp, HERMITIAN_TOL,
};
pub use tensor::{invert_perm, permute4, GridTensor, Tensor4};

pub(crate) use grid::check_same;
