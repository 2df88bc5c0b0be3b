//! Cell-by-cell assembly with the seven-point rule. Cells are visited in
//! index order and contributions are summed by [`TripletBuilder`], so the
//! result depends only on the inputs.
//!
//! Vector operators are block diagonal in the component index; row is the
//! test function, column the trial function.

use super::basis::{p2_gradients, p2_values};
use super::space::{FieldP2Vector, SpaceP1, SpaceP2Vector};
use crate::mesh::{Point, SimplicialMesh};
use crate::quadrature::{gauss3_interval, QuadratureRule};
use crate::sparse::{CsrMatrix, TripletBuilder};

/// Tabulated P2 values at the points of a rule.
struct P2Table {
    rule: QuadratureRule,
    values: Vec<[f64; 6]>,
}

impl P2Table {
    fn new(rule: QuadratureRule) -> Self {
        let values = rule.points.iter().map(|&l| p2_values(l)).collect();
        P2Table { rule, values }
    }
}

fn cell_order(n: usize, order: Option<&[usize]>) -> Vec<usize> {
    match order {
        Some(o) => o.to_vec(),
        None => (0..n).collect(),
    }
}

fn push_block(b: &mut TripletBuilder, ns: usize, dofs: &[usize; 6], local: &[[f64; 6]; 6]) {
    for c in 0..2 {
        for i in 0..6 {
            for j in 0..6 {
                b.push(c * ns + dofs[i], c * ns + dofs[j], local[i][j]);
            }
        }
    }
}

/// Vector P2 mass matrix `(phi_j, phi_i)`.
pub fn mass_p2(space: &SpaceP2Vector) -> CsrMatrix {
    mass_p2_ordered(space, None)
}

pub(crate) fn mass_p2_ordered(space: &SpaceP2Vector, order: Option<&[usize]>) -> CsrMatrix {
    let mesh = space.mesh();
    let ns = space.scalar_dim();
    let tab = P2Table::new(QuadratureRule::degree5());
    let mut b = TripletBuilder::with_capacity(2 * ns, 2 * ns, 72 * mesh.num_cells());
    for k in cell_order(mesh.num_cells(), order) {
        let area = mesh.geometry(k).area;
        let mut local = [[0.0; 6]; 6];
        for (q, w) in tab.rule.weights.iter().enumerate() {
            let v = &tab.values[q];
            for i in 0..6 {
                for j in 0..6 {
                    local[i][j] += area * w * v[i] * v[j];
                }
            }
        }
        push_block(&mut b, ns, &space.cell_dofs(k), &local);
    }
    b.build()
}

/// Vector P2 stiffness matrix `(grad phi_j, grad phi_i)`.
pub fn stiffness_p2(space: &SpaceP2Vector) -> CsrMatrix {
    stiffness_p2_ordered(space, None)
}

pub(crate) fn stiffness_p2_ordered(space: &SpaceP2Vector, order: Option<&[usize]>) -> CsrMatrix {
    let mesh = space.mesh();
    let ns = space.scalar_dim();
    let rule = QuadratureRule::degree5();
    let mut b = TripletBuilder::with_capacity(2 * ns, 2 * ns, 72 * mesh.num_cells());
    for k in cell_order(mesh.num_cells(), order) {
        let area = mesh.geometry(k).area;
        let dl = mesh.barycentric_gradients(k);
        let mut local = [[0.0; 6]; 6];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let g = p2_gradients(*l, &dl);
            for i in 0..6 {
                for j in 0..6 {
                    local[i][j] += area * w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                }
            }
        }
        push_block(&mut b, ns, &space.cell_dofs(k), &local);
    }
    b.build()
}

/// Local table `X[a][b] = Q((w . grad phi_b) phi_a)` on cell `k`, and the
/// local table of `div w phi_a phi_b`.
fn convection_tables(space: &SpaceP2Vector, wind: &FieldP2Vector, k: usize, tab: &P2Table) -> ([[f64; 6]; 6], [[f64; 6]; 6]) {
    let mesh = space.mesh();
    let ns = space.scalar_dim();
    let dofs = space.cell_dofs(k);
    let area = mesh.geometry(k).area;
    let dl = mesh.barycentric_gradients(k);
    let mut x = [[0.0; 6]; 6];
    let mut dv = [[0.0; 6]; 6];
    for (q, (l, w)) in tab.rule.points.iter().zip(&tab.rule.weights).enumerate() {
        let v = &tab.values[q];
        let g = p2_gradients(*l, &dl);
        let mut u = [0.0; 2];
        let mut div = 0.0;
        for i in 0..6 {
            let ux = wind.coeffs[dofs[i]];
            let uy = wind.coeffs[ns + dofs[i]];
            u[0] += ux * v[i];
            u[1] += uy * v[i];
            div += ux * g[i][0] + uy * g[i][1];
        }
        for a in 0..6 {
            for bb in 0..6 {
                x[a][bb] += area * w * (u[0] * g[bb][0] + u[1] * g[bb][1]) * v[a];
                dv[a][bb] += area * w * div * v[a] * v[bb];
            }
        }
    }
    (x, dv)
}

/// Skew-symmetric convection matrix `C(w)` with entries
/// `1/2 ((w . grad phi_j) phi_i - (w . grad phi_i) phi_j)`.
pub fn convection(space: &SpaceP2Vector, wind: &FieldP2Vector) -> CsrMatrix {
    let mesh = space.mesh();
    let ns = space.scalar_dim();
    let tab = P2Table::new(QuadratureRule::degree5());
    let mut b = TripletBuilder::with_capacity(2 * ns, 2 * ns, 72 * mesh.num_cells());
    for k in 0..mesh.num_cells() {
        let (x, _) = convection_tables(space, wind, k, &tab);
        let mut local = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                local[i][j] = 0.5 * (x[i][j] - x[j][i]);
            }
        }
        push_block(&mut b, ns, &space.cell_dofs(k), &local);
    }
    b.build()
}

/// The advective form plus half the divergence term:
/// `(w . grad phi_j) phi_i + 1/2 div w phi_i phi_j`. Agrees with
/// [`convection`] whenever the wind vanishes on the boundary.
pub fn convection_identity_form(space: &SpaceP2Vector, wind: &FieldP2Vector) -> CsrMatrix {
    let mesh = space.mesh();
    let ns = space.scalar_dim();
    let tab = P2Table::new(QuadratureRule::degree5());
    let mut b = TripletBuilder::with_capacity(2 * ns, 2 * ns, 72 * mesh.num_cells());
    for k in 0..mesh.num_cells() {
        let (x, dv) = convection_tables(space, wind, k, &tab);
        let mut local = [[0.0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                local[i][j] = x[i][j] + 0.5 * dv[i][j];
            }
        }
        push_block(&mut b, ns, &space.cell_dofs(k), &local);
    }
    b.build()
}

/// Gradient coupling `G` of shape `(2 ns) x nv` with
/// `G[(c, s), k] = (d_c phi_k, phi_s)`, so that `v^T G q = (grad q, v)`.
pub fn grad_coupling(space: &SpaceP2Vector, p1: &SpaceP1) -> CsrMatrix {
    assert_eq!(space.mesh().id(), p1.mesh().id());
    let mesh = space.mesh();
    let ns = space.scalar_dim();
    let mut b = TripletBuilder::with_capacity(2 * ns, mesh.num_vertices(), 36 * mesh.num_cells());
    for k in 0..mesh.num_cells() {
        let area = mesh.geometry(k).area;
        let dl = mesh.barycentric_gradients(k);
        let cell = mesh.cells()[k];
        let dofs = space.cell_dofs(k);
        // vertex P2 functions integrate to 0, edge functions to |K|/3
        for &s in &dofs[3..] {
            let int_phi = area / 3.0;
            for a in 0..3 {
                for c in 0..2 {
                    b.push(c * ns + s, cell[a], dl[a][c] * int_phi);
                }
            }
        }
    }
    b.build()
}

/// Direct divergence moments `D[k, (c, s)] = (d_c phi_s, phi_k)`, shape
/// `nv x (2 ns)`. For fields vanishing on the boundary `D = -G^T`.
pub fn divergence_matrix(space: &SpaceP2Vector) -> CsrMatrix {
    let mesh = space.mesh();
    let ns = space.scalar_dim();
    let rule = QuadratureRule::degree5();
    let mut b = TripletBuilder::with_capacity(mesh.num_vertices(), 2 * ns, 36 * mesh.num_cells());
    for k in 0..mesh.num_cells() {
        let area = mesh.geometry(k).area;
        let dl = mesh.barycentric_gradients(k);
        let cell = mesh.cells()[k];
        let dofs = space.cell_dofs(k);
        let mut local = [[[0.0; 6]; 2]; 3];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let g = p2_gradients(*l, &dl);
            for a in 0..3 {
                for c in 0..2 {
                    for i in 0..6 {
                        local[a][c][i] += area * w * g[i][c] * l[a];
                    }
                }
            }
        }
        for a in 0..3 {
            for c in 0..2 {
                for i in 0..6 {
                    b.push(cell[a], c * ns + dofs[i], local[a][c][i]);
                }
            }
        }
    }
    b.build()
}

/// P1 stiffness `(grad phi_j, grad phi_i)`.
pub fn pressure_laplacian(p1: &SpaceP1) -> CsrMatrix {
    let mesh = p1.mesh();
    let nv = mesh.num_vertices();
    let mut b = TripletBuilder::with_capacity(nv, nv, 9 * mesh.num_cells());
    for k in 0..mesh.num_cells() {
        let area = mesh.geometry(k).area;
        let dl = mesh.barycentric_gradients(k);
        let cell = mesh.cells()[k];
        for a in 0..3 {
            for c in 0..3 {
                b.push(cell[a], cell[c], area * (dl[a][0] * dl[c][0] + dl[a][1] * dl[c][1]));
            }
        }
    }
    b.build()
}

/// P1 mass matrix `(phi_j, phi_i)`.
pub fn mass_p1(p1: &SpaceP1) -> CsrMatrix {
    let mesh = p1.mesh();
    let nv = mesh.num_vertices();
    let mut b = TripletBuilder::with_capacity(nv, nv, 9 * mesh.num_cells());
    for k in 0..mesh.num_cells() {
        let area = mesh.geometry(k).area;
        let cell = mesh.cells()[k];
        for a in 0..3 {
            for c in 0..3 {
                let m = if a == c { area / 6.0 } else { area / 12.0 };
                b.push(cell[a], cell[c], m);
            }
        }
    }
    b.build()
}

/// `(1, phi_k)` for every vertex.
pub fn p1_mass_rows(p1: &SpaceP1) -> Vec<f64> {
    let mesh = p1.mesh();
    let mut rows = vec![0.0; mesh.num_vertices()];
    for k in 0..mesh.num_cells() {
        let third = mesh.geometry(k).area / 3.0;
        for &v in &mesh.cells()[k] {
            rows[v] += third;
        }
    }
    rows
}

/// Load vector `((1/(tb - ta)) int_ta^tb f dt, phi)`: three-point Gauss
/// in time, seven-point rule in space.
pub fn load(space: &SpaceP2Vector, f: &dyn Fn(Point, f64) -> [f64; 2], ta: f64, tb: f64) -> Vec<f64> {
    assert!(ta < tb, "load interval must be increasing");
    let times = gauss3_interval(ta, tb);
    load_with_times(space, f, &times)
}

/// Load vector at a single time.
pub fn load_at(space: &SpaceP2Vector, f: &dyn Fn(Point, f64) -> [f64; 2], t: f64) -> Vec<f64> {
    load_with_times(space, f, &[(t, 1.0)])
}

fn load_with_times(space: &SpaceP2Vector, f: &dyn Fn(Point, f64) -> [f64; 2], times: &[(f64, f64)]) -> Vec<f64> {
    let mesh: &SimplicialMesh = space.mesh();
    let ns = space.scalar_dim();
    let tab = P2Table::new(QuadratureRule::degree5());
    let mut out = vec![0.0; 2 * ns];
    for k in 0..mesh.num_cells() {
        let area = mesh.geometry(k).area;
        let dofs = space.cell_dofs(k);
        for (q, (l, w)) in tab.rule.points.iter().zip(&tab.rule.weights).enumerate() {
            let x = mesh.map_point(k, *l);
            let mut fv = [0.0; 2];
            for &(t, wt) in times {
                let v = f(x, t);
                fv[0] += wt * v[0];
                fv[1] += wt * v[1];
            }
            for i in 0..6 {
                let s = area * w * tab.values[q][i];
                out[dofs[i]] += s * fv[0];
                out[ns + dofs[i]] += s * fv[1];
            }
        }
    }
    out
}
