//! P1/P2 Lagrange spaces, assembly of every form used by the time stepping
//! and the interpolation operators, and the norms built on top of them.

pub mod assembly;
pub mod basis;
mod operators;
mod space;

pub use operators::Operators;
pub(crate) use operators::sample_points;
pub use space::{grad_p1, CompositeVelocity, FieldP1Scalar, FieldP2Vector, SpaceP1, SpaceP2Vector};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FemError {
    #[error("field belongs to a different mesh")]
    MeshMismatch,
    #[error("coefficient vector length {found} does not match space dimension {expected}")]
    LengthMismatch { expected: usize, found: usize },
}
