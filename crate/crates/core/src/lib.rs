//! Incremental pressure-correction projection scheme for the incompressible
//! Navier-Stokes equations with P2/P1 Taylor-Hood elements on triangles,
//! together with a divergence-correcting interpolation operator.

pub mod fem;
pub mod interp;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod scheme;
pub mod sparse;
