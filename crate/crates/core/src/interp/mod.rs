//! Interpolation into the P2 velocity space: nodal (Lagrange)
//! interpolation, tangential edge bubbles, the divergence-correcting
//! bubble operator and their composition, which maps smooth
//! divergence-free fields with compact support to discretely
//! divergence-free P2 fields.

mod fields;
mod study;

pub use fields::{CurlField, FnField, Profile, VectorField};
pub use study::{
    lagrange_linf_constant, pi_n_convergence_study, support_locality_violations, write_study_csv, EBNormBundle,
    StudyRow,
};

use rand::Rng;
use thiserror::Error;

use crate::fem::{FemError, FieldP2Vector, SpaceP2Vector};
use crate::mesh::{MeshError, Point};
use crate::quadrature::QuadratureRule;

/// Degree of the rule used for integrals with a closed-form integrand.
pub const ANALYTIC_QUADRATURE_DEGREE: usize = 13;

#[derive(Debug, Error)]
pub enum InterpError {
    #[error("divergence correction requires vanishing boundary trace")]
    BoundaryTrace,
    #[error("field is not declared divergence-free")]
    NotDivergenceFree,
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Fem(#[from] FemError),
}

/// Which branch of the composite interpolant produced the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PiNStatus {
    /// Lagrange interpolant plus bubble correction, vanishing on the boundary.
    Corrected,
    /// The corrected field would not vanish on the boundary; result is 0.
    Zeroed,
}

impl PiNStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            PiNStatus::Corrected => "corrected",
            PiNStatus::Zeroed => "zeroed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PiNResult {
    pub field: FieldP2Vector,
    pub status: PiNStatus,
    /// Per-edge correction coefficients `(w, phi_j grad phi_i - phi_i grad phi_j)`
    /// for the canonical orientation `i < j`.
    pub edge_coefficients: Vec<f64>,
}

/// Nodal interpolant: samples at every vertex and edge midpoint.
pub fn lagrange_p2(v: &dyn VectorField, space: &SpaceP2Vector) -> FieldP2Vector {
    space.interpolate(|p| v.value(p))
}

/// Midpoint value of the bubble `b_{i,j}` of canonical edge `e`,
/// oriented from its first to its second vertex.
fn bubble_midpoint(space: &SpaceP2Vector, e: usize) -> [f64; 2] {
    let mesh = space.mesh();
    let [i, j] = mesh.edges()[e];
    let yi = mesh.vertices()[i];
    let yj = mesh.vertices()[j];
    // 12 / |omega| times phi_i phi_j, and phi_i phi_j is a quarter of the edge function
    let s = 3.0 / mesh.edge_patch(e).measure;
    [s * (yj[0] - yi[0]), s * (yj[1] - yi[1])]
}

/// Tangential edge bubble `b_{i,j} = (12 / |omega_ij|) phi_i phi_j (y_j - y_i)`.
/// Only the midpoint dof of edge `{i, j}` is nonzero and `b_{j,i} = -b_{i,j}`.
pub fn edge_bubble(space: &SpaceP2Vector, i: usize, j: usize) -> Result<FieldP2Vector, InterpError> {
    let mesh = space.mesh();
    let e = mesh.find_edge(i, j).ok_or(MeshError::NotAnEdge(i, j))?;
    let mut m = bubble_midpoint(space, e);
    if mesh.edges()[e][0] != i {
        m = [-m[0], -m[1]];
    }
    let ns = space.scalar_dim();
    let s = mesh.num_vertices() + e;
    let mut f = space.zeros();
    f.coeffs[s] = m[0];
    f.coeffs[ns + s] = m[1];
    Ok(f)
}

/// Per-edge coefficients `c_e = int w . (phi_j grad phi_i - phi_i grad phi_j)`
/// for canonical edges `e = {i < j}`; `w` is evaluated by cell and
/// barycentric point.
fn edge_coefficients(space: &SpaceP2Vector, rule: &QuadratureRule, w: &dyn Fn(usize, [f64; 3]) -> [f64; 2]) -> Vec<f64> {
    let mesh = space.mesh();
    let mut c = vec![0.0; mesh.num_edges()];
    for k in 0..mesh.num_cells() {
        let area = mesh.geometry(k).area;
        let dl = mesh.barycentric_gradients(k);
        let cell = mesh.cells()[k];
        let edges = mesh.cell_edges()[k];
        let mut local = [0.0; 3];
        for (l, wq) in rule.points.iter().zip(&rule.weights) {
            let val = w(k, *l);
            for (m, &[a, b]) in crate::fem::basis::EDGE_VERTICES.iter().enumerate() {
                // orient local pair so that a is the smaller global index
                let (a, b) = if cell[a] < cell[b] { (a, b) } else { (b, a) };
                let t = [l[b] * dl[a][0] - l[a] * dl[b][0], l[b] * dl[a][1] - l[a] * dl[b][1]];
                local[m] += area * wq * (val[0] * t[0] + val[1] * t[1]);
            }
        }
        for m in 0..3 {
            c[edges[m]] += local[m];
        }
    }
    c
}

/// `sum_e c_e b_{j,i}` as a P2 field.
fn assemble_correction(space: &SpaceP2Vector, coeffs: &[f64]) -> FieldP2Vector {
    let ns = space.scalar_dim();
    let nv = space.mesh().num_vertices();
    let mut f = space.zeros();
    for (e, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let m = bubble_midpoint(space, e);
        f.coeffs[nv + e] = -c * m[0];
        f.coeffs[ns + nv + e] = -c * m[1];
    }
    f
}

/// Divergence correction of a P2 field vanishing on the boundary. The
/// result lives on edge midpoints only and has the same divergence
/// moments against every P1 basis function as the input.
pub fn divergence_correct_field(space: &SpaceP2Vector, w: &FieldP2Vector) -> Result<FieldP2Vector, InterpError> {
    if w.mesh_id() != space.mesh().id() {
        return Err(FemError::MeshMismatch.into());
    }
    if !space.is_in_x(w) {
        return Err(InterpError::BoundaryTrace);
    }
    let rule = QuadratureRule::degree5();
    let c = edge_coefficients(space, &rule, &|k, l| space.eval(w, k, l).0);
    Ok(assemble_correction(space, &c))
}

/// Boundary sample points: vertices and five points along each boundary edge.
fn boundary_samples(space: &SpaceP2Vector) -> Vec<Point> {
    let mesh = space.mesh();
    let mut pts = Vec::new();
    for &e in mesh.boundary_edges() {
        let [i, j] = mesh.edges()[e];
        let (a, b) = (mesh.vertices()[i], mesh.vertices()[j]);
        for s in [0.0, 0.25, 0.5, 0.75, 1.0] {
            pts.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
        }
    }
    pts
}

/// Divergence correction of a closed-form field that vanishes on the boundary.
pub fn divergence_correct_analytic(space: &SpaceP2Vector, v: &dyn VectorField) -> Result<FieldP2Vector, InterpError> {
    if boundary_samples(space).into_iter().any(|p| v.value(p) != [0.0, 0.0]) {
        return Err(InterpError::BoundaryTrace);
    }
    let rule = QuadratureRule::collapsed_gauss(ANALYTIC_QUADRATURE_DEGREE);
    let mesh = space.mesh();
    let c = edge_coefficients(space, &rule, &|k, l| v.value(mesh.map_point(k, l)));
    Ok(assemble_correction(space, &c))
}

/// Composite interpolant: the Lagrange interpolant plus the divergence
/// correction of the interpolation error, kept only when it vanishes on
/// the boundary (decided on exact zero coefficients), and zero otherwise.
pub fn pi_n(space: &SpaceP2Vector, v: &dyn VectorField) -> Result<PiNResult, InterpError> {
    if !v.divergence_free() {
        return Err(InterpError::NotDivergenceFree);
    }
    let lagrange = lagrange_p2(v, space);
    let rule = QuadratureRule::collapsed_gauss(ANALYTIC_QUADRATURE_DEGREE);
    let mesh = space.mesh();
    let coeffs = edge_coefficients(space, &rule, &|k, l| {
        let exact = v.value(mesh.map_point(k, l));
        let (li, _) = space.eval(&lagrange, k, l);
        [exact[0] - li[0], exact[1] - li[1]]
    });
    let admissible = space.is_in_x(&lagrange) && mesh.boundary_edges().iter().all(|&e| coeffs[e] == 0.0);
    if !admissible {
        return Ok(PiNResult { field: space.zeros(), status: PiNStatus::Zeroed, edge_coefficients: coeffs });
    }
    let correction = assemble_correction(space, &coeffs);
    let field = lagrange.axpy(1.0, &correction);
    Ok(PiNResult { field, status: PiNStatus::Corrected, edge_coefficients: coeffs })
}

/// Random P2 field with uniform coefficients in `[-1, 1]` on interior
/// dofs and zero on the boundary.
pub fn random_interior_field<R: Rng>(space: &SpaceP2Vector, rng: &mut R) -> FieldP2Vector {
    let free: Vec<f64> = (0..space.free_dofs().len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    space.extend_free(&free)
}
