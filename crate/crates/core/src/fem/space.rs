use std::sync::Arc;

use super::basis::{p2_gradients, p2_values, EDGE_VERTICES};
use super::FemError;
use crate::mesh::{MeshId, Point, SimplicialMesh};

/// Continuous piecewise-affine scalars; one dof per vertex.
#[derive(Debug, Clone)]
pub struct SpaceP1 {
    mesh: Arc<SimplicialMesh>,
    zero_mean: bool,
}

impl SpaceP1 {
    pub fn new(mesh: Arc<SimplicialMesh>, zero_mean: bool) -> Self {
        SpaceP1 { mesh, zero_mean }
    }

    pub fn mesh(&self) -> &Arc<SimplicialMesh> {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.mesh.num_vertices()
    }

    pub fn zero_mean(&self) -> bool {
        self.zero_mean
    }

    pub fn zeros(&self) -> FieldP1Scalar {
        FieldP1Scalar { mesh_id: self.mesh.id(), values: vec![0.0; self.dim()] }
    }

    pub fn field(&self, values: Vec<f64>) -> Result<FieldP1Scalar, FemError> {
        if values.len() != self.dim() {
            return Err(FemError::LengthMismatch { expected: self.dim(), found: values.len() });
        }
        Ok(FieldP1Scalar { mesh_id: self.mesh.id(), values })
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> FieldP1Scalar {
        let values = self.mesh.vertices().iter().map(|&p| f(p)).collect();
        FieldP1Scalar { mesh_id: self.mesh.id(), values }
    }

    pub(crate) fn check(&self, f: &FieldP1Scalar) -> Result<(), FemError> {
        if f.mesh_id != self.mesh.id() {
            return Err(FemError::MeshMismatch);
        }
        if f.values.len() != self.dim() {
            return Err(FemError::LengthMismatch { expected: self.dim(), found: f.values.len() });
        }
        Ok(())
    }
}

/// Continuous piecewise-quadratic vector fields with two components.
///
/// Scalar dofs are the vertices (`0..nv`) followed by the edge midpoints
/// (`nv..nv + ne`). Vector coefficients are stored component-major:
/// index `c * ns + s` for component `c` and scalar dof `s`.
#[derive(Debug, Clone)]
pub struct SpaceP2Vector {
    mesh: Arc<SimplicialMesh>,
    interior: Vec<bool>,
    free: Vec<usize>,
}

impl SpaceP2Vector {
    pub fn new(mesh: Arc<SimplicialMesh>) -> Self {
        let nv = mesh.num_vertices();
        let ne = mesh.num_edges();
        let mut interior = Vec::with_capacity(nv + ne);
        interior.extend((0..nv).map(|v| !mesh.is_boundary_vertex(v)));
        interior.extend((0..ne).map(|e| !mesh.is_boundary_edge(e)));
        let ns = nv + ne;
        let free = (0..2)
            .flat_map(|c| (0..ns).filter(|&s| interior[s]).map(move |s| c * ns + s).collect::<Vec<_>>())
            .collect();
        SpaceP2Vector { mesh, interior, free }
    }

    pub fn mesh(&self) -> &Arc<SimplicialMesh> {
        &self.mesh
    }

    /// Number of scalar dofs (vertices plus edges).
    pub fn scalar_dim(&self) -> usize {
        self.interior.len()
    }

    /// Number of vector coefficients.
    pub fn dim(&self) -> usize {
        2 * self.scalar_dim()
    }

    pub fn components(&self) -> usize {
        2
    }

    pub fn is_interior(&self, s: usize) -> bool {
        self.interior[s]
    }

    /// Vector coefficient indices of dofs lying inside the domain.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free
    }

    /// Vector coefficient indices of dofs on the boundary.
    pub fn boundary_dofs(&self) -> Vec<usize> {
        let ns = self.scalar_dim();
        (0..2).flat_map(|c| (0..ns).filter(|&s| !self.interior[s]).map(move |s| c * ns + s)).collect()
    }

    /// Global scalar dofs of the six local P2 functions of cell `k`.
    pub fn cell_dofs(&self, k: usize) -> [usize; 6] {
        let c = self.mesh.cells()[k];
        let e = self.mesh.cell_edges()[k];
        let nv = self.mesh.num_vertices();
        [c[0], c[1], c[2], nv + e[0], nv + e[1], nv + e[2]]
    }

    /// Physical location of scalar dof `s`.
    pub fn node(&self, s: usize) -> Point {
        let nv = self.mesh.num_vertices();
        if s < nv {
            self.mesh.vertices()[s]
        } else {
            self.mesh.edge_midpoint(s - nv)
        }
    }

    pub fn zeros(&self) -> FieldP2Vector {
        FieldP2Vector { mesh_id: self.mesh.id(), coeffs: vec![0.0; self.dim()] }
    }

    pub fn field(&self, coeffs: Vec<f64>) -> Result<FieldP2Vector, FemError> {
        if coeffs.len() != self.dim() {
            return Err(FemError::LengthMismatch { expected: self.dim(), found: coeffs.len() });
        }
        Ok(FieldP2Vector { mesh_id: self.mesh.id(), coeffs })
    }

    /// Nodal (Lagrange) interpolant of `f` at every vertex and midpoint.
    pub fn interpolate(&self, f: impl Fn(Point) -> [f64; 2]) -> FieldP2Vector {
        let ns = self.scalar_dim();
        let mut coeffs = vec![0.0; 2 * ns];
        for s in 0..ns {
            let v = f(self.node(s));
            coeffs[s] = v[0];
            coeffs[ns + s] = v[1];
        }
        FieldP2Vector { mesh_id: self.mesh.id(), coeffs }
    }

    /// Expands coefficients on the free dofs to a full field with zero boundary values.
    pub fn extend_free(&self, free_values: &[f64]) -> FieldP2Vector {
        let mut coeffs = vec![0.0; self.dim()];
        for (&i, &v) in self.free.iter().zip(free_values) {
            coeffs[i] = v;
        }
        FieldP2Vector { mesh_id: self.mesh.id(), coeffs }
    }

    pub fn restrict_free(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&i| full[i]).collect()
    }

    /// True when every boundary coefficient is exactly zero.
    pub fn is_in_x(&self, f: &FieldP2Vector) -> bool {
        let ns = self.scalar_dim();
        (0..ns).filter(|&s| !self.interior[s]).all(|s| f.coeffs[s] == 0.0 && f.coeffs[ns + s] == 0.0)
    }

    pub(crate) fn check(&self, f: &FieldP2Vector) -> Result<(), FemError> {
        if f.mesh_id != self.mesh.id() {
            return Err(FemError::MeshMismatch);
        }
        if f.coeffs.len() != self.dim() {
            return Err(FemError::LengthMismatch { expected: self.dim(), found: f.coeffs.len() });
        }
        Ok(())
    }

    /// Value and gradient (`grad[c][d] = d u_c / d x_d`) of `f` at
    /// barycentric point `bary` of cell `k`.
    pub fn eval(&self, f: &FieldP2Vector, k: usize, bary: [f64; 3]) -> ([f64; 2], [[f64; 2]; 2]) {
        let ns = self.scalar_dim();
        let dofs = self.cell_dofs(k);
        let vals = p2_values(bary);
        let grads = p2_gradients(bary, &self.mesh.barycentric_gradients(k));
        let mut u = [0.0; 2];
        let mut g = [[0.0; 2]; 2];
        for i in 0..6 {
            for c in 0..2 {
                let coef = f.coeffs[c * ns + dofs[i]];
                u[c] += coef * vals[i];
                g[c][0] += coef * grads[i][0];
                g[c][1] += coef * grads[i][1];
            }
        }
        (u, g)
    }

    /// Local edge slot of edge `e` in cell `k`, with its two local vertices.
    pub fn local_edge(&self, k: usize, e: usize) -> Option<(usize, [usize; 2])> {
        self.mesh.cell_edges()[k].iter().position(|&x| x == e).map(|m| (m, EDGE_VERTICES[m]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldP1Scalar {
    pub(crate) mesh_id: MeshId,
    pub values: Vec<f64>,
}

impl FieldP1Scalar {
    pub fn mesh_id(&self) -> MeshId {
        self.mesh_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldP2Vector {
    pub(crate) mesh_id: MeshId,
    pub coeffs: Vec<f64>,
}

impl FieldP2Vector {
    pub fn mesh_id(&self) -> MeshId {
        self.mesh_id
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn axpy(&self, alpha: f64, other: &FieldP2Vector) -> FieldP2Vector {
        debug_assert_eq!(self.mesh_id, other.mesh_id);
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + alpha * b).collect();
        FieldP2Vector { mesh_id: self.mesh_id, coeffs }
    }

    pub fn scaled(&self, s: f64) -> FieldP2Vector {
        FieldP2Vector { mesh_id: self.mesh_id, coeffs: self.coeffs.iter().map(|c| s * c).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// `p2_part - scale * grad(grad_part)`: a P2 field plus a piecewise
/// constant gradient of a P1 scalar. Never collapsed to a nodal field.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeVelocity {
    pub p2_part: FieldP2Vector,
    pub grad_part: FieldP1Scalar,
    pub scale: f64,
}

impl CompositeVelocity {
    pub fn from_p2(p2_part: FieldP2Vector, p1: &SpaceP1) -> Self {
        CompositeVelocity { p2_part, grad_part: p1.zeros(), scale: 0.0 }
    }

    /// Value of the composite field at a point of cell `k`.
    pub fn eval(&self, space: &SpaceP2Vector, k: usize, bary: [f64; 3]) -> [f64; 2] {
        let (u, _) = space.eval(&self.p2_part, k, bary);
        let g = grad_p1(space.mesh(), &self.grad_part, k);
        [u[0] - self.scale * g[0], u[1] - self.scale * g[1]]
    }
}

/// Constant gradient of a P1 field on cell `k`.
pub fn grad_p1(mesh: &SimplicialMesh, q: &FieldP1Scalar, k: usize) -> [f64; 2] {
    let dl = mesh.barycentric_gradients(k);
    let c = mesh.cells()[k];
    let mut g = [0.0; 2];
    for a in 0..3 {
        g[0] += q.values[c[a]] * dl[a][0];
        g[1] += q.values[c[a]] * dl[a][1];
    }
    g
}
