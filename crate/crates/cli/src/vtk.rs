//! Legacy VTK (ASCII, unstructured grid) output on the visualization mesh
//! that splits every triangle into four at its edge midpoints.
//!
//! Points are the mesh vertices followed by the edge midpoints, so P2
//! fields are written exactly as point data. The corrected velocity jumps
//! across cells and is written per sub-cell.

use std::io::Write;

use projnav::fem::{grad_p1, CompositeVelocity, FieldP1Scalar, FieldP2Vector, SpaceP2Vector};
use projnav::mesh::SimplicialMesh;

const VTK_TRIANGLE: u8 = 5;
const SUB_CENTROIDS: [[f64; 3]; 4] = [
    [4.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 4.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 4.0 / 6.0],
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
];

/// Fields attached to one output file.
#[derive(Default)]
pub struct VtkFields<'a> {
    pub point_vectors: Vec<(&'a str, &'a FieldP2Vector)>,
    pub point_scalars: Vec<(&'a str, &'a FieldP1Scalar)>,
    pub composites: Vec<(&'a str, &'a CompositeVelocity)>,
}

/// Local P2 nodes (vertices 0..3, midpoints 3..6) of the four sub-triangles.
fn sub_triangles() -> [[usize; 3]; 4] {
    // midpoint 3 + m lies opposite local vertex m
    [[0, 5, 4], [5, 1, 3], [4, 3, 2], [3, 4, 5]]
}

pub fn write_vtk<W: Write>(space: &SpaceP2Vector, title: &str, fields: &VtkFields, mut out: W) -> std::io::Result<()> {
    let mesh: &SimplicialMesh = space.mesh();
    let ns = space.scalar_dim();
    let nv = mesh.num_vertices();
    let ncells = 4 * mesh.num_cells();
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "{}", title.replace('\n', " "))?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {ns} double")?;
    for s in 0..ns {
        let p = space.node(s);
        writeln!(out, "{:.17e} {:.17e} 0", p[0], p[1])?;
    }
    writeln!(out, "CELLS {ncells} {}", 4 * ncells)?;
    for k in 0..mesh.num_cells() {
        let dofs = space.cell_dofs(k);
        for t in sub_triangles() {
            writeln!(out, "3 {} {} {}", dofs[t[0]], dofs[t[1]], dofs[t[2]])?;
        }
    }
    writeln!(out, "CELL_TYPES {ncells}")?;
    for _ in 0..ncells {
        writeln!(out, "{VTK_TRIANGLE}")?;
    }

    if !fields.point_vectors.is_empty() || !fields.point_scalars.is_empty() {
        writeln!(out, "POINT_DATA {ns}")?;
        for (name, f) in &fields.point_vectors {
            writeln!(out, "VECTORS {name} double")?;
            for s in 0..ns {
                writeln!(out, "{:.17e} {:.17e} 0", f.coeffs[s], f.coeffs[ns + s])?;
            }
        }
        for (name, q) in &fields.point_scalars {
            writeln!(out, "SCALARS {name} double 1")?;
            writeln!(out, "LOOKUP_TABLE default")?;
            for s in 0..ns {
                let v = if s < nv {
                    q.values[s]
                } else {
                    let [a, b] = mesh.edges()[s - nv];
                    0.5 * (q.values[a] + q.values[b])
                };
                writeln!(out, "{v:.17e}")?;
            }
        }
    }

    if !fields.composites.is_empty() {
        writeln!(out, "CELL_DATA {ncells}")?;
        for (name, u) in &fields.composites {
            writeln!(out, "VECTORS {name}_p2_part double")?;
            for k in 0..mesh.num_cells() {
                for c in SUB_CENTROIDS {
                    let (v, _) = space.eval(&u.p2_part, k, c);
                    writeln!(out, "{:.17e} {:.17e} 0", v[0], v[1])?;
                }
            }
            writeln!(out, "VECTORS {name}_grad_part double")?;
            for k in 0..mesh.num_cells() {
                let g = grad_p1(mesh, &u.grad_part, k);
                for _ in 0..4 {
                    writeln!(out, "{:.17e} {:.17e} 0", -u.scale * g[0], -u.scale * g[1])?;
                }
            }
            writeln!(out, "VECTORS {name} double")?;
            for k in 0..mesh.num_cells() {
                for c in SUB_CENTROIDS {
                    let v = u.eval(space, k, c);
                    writeln!(out, "{:.17e} {:.17e} 0", v[0], v[1])?;
                }
            }
        }
    }
    Ok(())
}
