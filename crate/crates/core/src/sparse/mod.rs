//! Sparse storage and the iterative solvers used by the time stepping.

mod csr;
mod solvers;

pub use csr::{dot, norm2, CsrMatrix, TripletBuilder};
pub use solvers::{bicgstab_solve, cg_solve, relative_residual, SolverOptions, SolverReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SparseError {
    #[error("invalid CSR structure: {0}")]
    InvalidStructure(String),
    #[error("matrix is not square ({nrows} x {ncols})")]
    NotSquare { nrows: usize, ncols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("singular system inconsistent: relative component {component:e} along the constant kernel")]
    Inconsistent { component: f64 },
}
