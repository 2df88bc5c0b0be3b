use super::{MeshError, SimplicialMesh};

/// Small meshes on which P2/P1 velocity-pressure compatibility fails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathologicalKind {
    /// One to three triangles where some cell has all of its vertices on
    /// the boundary and owns a vertex no other cell touches.
    AllBoundaryCell { triangles: usize },
    /// Structured unit-square mesh whose cells are flagged as core when
    /// their distance to the boundary exceeds `omega * h`.
    BoundaryStrip { n: usize, omega: f64 },
}

#[derive(Debug, Clone)]
pub struct PathologicalMesh {
    pub mesh: SimplicialMesh,
    /// Per-cell core flag, only for [`PathologicalKind::BoundaryStrip`].
    pub core: Option<Vec<bool>>,
}

pub fn build_pathological_mesh(kind: PathologicalKind) -> Result<PathologicalMesh, MeshError> {
    match kind {
        PathologicalKind::AllBoundaryCell { triangles } => {
            let mesh = match triangles {
                1 => SimplicialMesh::from_arrays(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]])?,
                2 => SimplicialMesh::structured_unit_square(1)?,
                3 => SimplicialMesh::from_arrays(
                    vec![[0.0, 0.0], [1.0, 0.0], [1.0, 0.6], [0.6, 1.0], [0.0, 1.0]],
                    vec![[0, 1, 2], [0, 2, 3], [0, 3, 4]],
                )?,
                other => {
                    return Err(MeshError::Parse {
                        line: 0,
                        message: format!("all_boundary_cell supports 1 to 3 triangles, got {other}"),
                    })
                }
            };
            Ok(PathologicalMesh { mesh, core: None })
        }
        PathologicalKind::BoundaryStrip { n, omega } => {
            let mesh = SimplicialMesh::structured_unit_square(n)?;
            let threshold = omega * mesh.metrics().h;
            let core = (0..mesh.num_cells()).map(|k| mesh.cell_boundary_distance(k) > threshold).collect();
            Ok(PathologicalMesh { mesh, core: Some(core) })
        }
    }
}
