//! Shared numerical kernels: sparse storage, Krylov solvers, cubic-grid transforms.

pub mod cg;
pub mod fft;
pub mod sparse;

pub use cg::{conjugate_gradient, CgOutcome};
pub use fft::{CosineTransform3, Fft3};
pub use sparse::{dot, norm2, LinearOperator, SparseMatrix, Symmetry};
