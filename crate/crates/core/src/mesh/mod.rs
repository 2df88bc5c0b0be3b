//! Conforming triangular meshes with the combinatorial and metric data
//! the finite element spaces and the interpolation operators rely on.

mod io;
mod pathological;

pub use io::{read_mesh, read_mesh_file, write_mesh, write_mesh_file};
pub use pathological::{build_pathological_mesh, PathologicalKind, PathologicalMesh};

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

pub type Point = [f64; 2];

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

/// Identifier shared by a mesh and every space/field built on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeshId(u64);

impl MeshId {
    fn fresh() -> Self {
        MeshId(NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("structured mesh needs at least one subdivision, got n = {0}")]
    EmptyStructured(usize),
    #[error("cell {cell} references vertex {index}, but only {count} vertices exist")]
    IndexOutOfRange { cell: usize, index: usize, count: usize },
    #[error("cell {cell} repeats vertex {index}")]
    RepeatedVertex { cell: usize, index: usize },
    #[error("duplicate cell: cell {cell} has the same vertices as cell {first}")]
    DuplicateCell { cell: usize, first: usize },
    #[error("zero-area cell {cell} (area {area:e})")]
    ZeroArea { cell: usize, area: f64 },
    #[error("non-manifold edge ({i}, {j}) shared by {count} cells")]
    NonManifoldEdge { i: usize, j: usize, count: usize },
    #[error("mesh has no cells")]
    NoCells,
    #[error("invalid edge index {0}")]
    InvalidEdge(usize),
    #[error("vertices {0} and {1} do not form a mesh edge")]
    NotAnEdge(usize, usize),
    #[error("mesh file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Per-cell measures: area `|K|`, diameter `h_K` and inscribed-ball diameter `rho_K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    pub area: f64,
    pub diameter: f64,
    pub rho: f64,
}

/// Cells incident to an edge together with the measure of their union.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePatch {
    pub cells: Vec<usize>,
    pub measure: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshMetrics {
    /// Largest cell diameter.
    pub h: f64,
    /// Largest ratio between cell diameter and inscribed-ball diameter.
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchStats {
    pub cell_count: usize,
    pub measure: f64,
    pub diameter: f64,
}

/// A conforming simplicial mesh of a polygonal domain.
///
/// Cells are stored counter-clockwise. Edges are unordered vertex pairs
/// stored as `[i, j]` with `i < j`; local edge `k` of a cell is the edge
/// opposite its local vertex `k`.
#[derive(Debug, Clone)]
pub struct SimplicialMesh {
    id: MeshId,
    vertices: Vec<Point>,
    cells: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<[usize; 3]>,
    edge_patches: Vec<EdgePatch>,
    vertex_patches: Vec<Vec<usize>>,
    boundary_edges: Vec<usize>,
    is_boundary_edge: Vec<bool>,
    boundary_vertices: Vec<usize>,
    interior_vertices: Vec<usize>,
    is_boundary_vertex: Vec<bool>,
    geometry: Vec<CellGeometry>,
    edge_lookup: HashMap<(usize, usize), usize>,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub(crate) fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl SimplicialMesh {
    /// Unit square split into `n x n` squares, each cut along the
    /// diagonal from its lower-left to its upper-right corner.
    pub fn structured_unit_square(n: usize) -> Result<Self, MeshError> {
        if n == 0 {
            return Err(MeshError::EmptyStructured(n));
        }
        let nf = n as f64;
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                // i / n is correctly rounded, so the far side lands exactly on 1
                vertices.push([i as f64 / nf, j as f64 / nf]);
            }
        }
        let idx = |i: usize, j: usize| j * (n + 1) + i;
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                cells.push([a, b, c]);
                cells.push([a, c, d]);
            }
        }
        Self::from_arrays(vertices, cells)
    }

    /// Builds the full connectivity from raw vertex and cell arrays.
    ///
    /// Clockwise cells are reordered; repeated, degenerate or
    /// non-manifold input is rejected with the offending entity.
    pub fn from_arrays(vertices: Vec<Point>, cells: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if cells.is_empty() {
            return Err(MeshError::NoCells);
        }
        let nv = vertices.len();
        let mut cells = cells;
        let mut seen: HashMap<[usize; 3], usize> = HashMap::with_capacity(cells.len());
        let scale = bounding_scale(&vertices);
        for (k, cell) in cells.iter_mut().enumerate() {
            for &v in cell.iter() {
                if v >= nv {
                    return Err(MeshError::IndexOutOfRange { cell: k, index: v, count: nv });
                }
            }
            if cell[0] == cell[1] || cell[0] == cell[2] {
                return Err(MeshError::RepeatedVertex { cell: k, index: cell[0] });
            }
            if cell[1] == cell[2] {
                return Err(MeshError::RepeatedVertex { cell: k, index: cell[1] });
            }
            let mut key = *cell;
            key.sort_unstable();
            if let Some(&first) = seen.get(&key) {
                return Err(MeshError::DuplicateCell { cell: k, first });
            }
            seen.insert(key, k);
            let area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if area.abs() <= 1e-14 * scale * scale {
                return Err(MeshError::ZeroArea { cell: k, area });
            }
            if area < 0.0 {
                cell.swap(1, 2);
            }
        }

        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut edge_lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edge_cells: Vec<Vec<usize>> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (k, cell) in cells.iter().enumerate() {
            let mut local = [0usize; 3];
            for (slot, (a, b)) in [(cell[1], cell[2]), (cell[2], cell[0]), (cell[0], cell[1])]
                .into_iter()
                .enumerate()
            {
                let key = (a.min(b), a.max(b));
                let e = *edge_lookup.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_cells.push(Vec::new());
                    edges.len() - 1
                });
                edge_cells[e].push(k);
                local[slot] = e;
            }
            cell_edges.push(local);
        }
        for (e, inc) in edge_cells.iter().enumerate() {
            if inc.len() > 2 {
                return Err(MeshError::NonManifoldEdge { i: edges[e][0], j: edges[e][1], count: inc.len() });
            }
        }

        let geometry: Vec<CellGeometry> = cells
            .iter()
            .map(|c| {
                let (a, b, p) = (vertices[c[0]], vertices[c[1]], vertices[c[2]]);
                let area = signed_area(a, b, p);
                let l = [distance(b, p), distance(p, a), distance(a, b)];
                let perimeter = l[0] + l[1] + l[2];
                CellGeometry { area, diameter: l[0].max(l[1]).max(l[2]), rho: 4.0 * area / perimeter }
            })
            .collect();

        let edge_patches = edge_cells
            .into_iter()
            .map(|cells| {
                let measure = cells.iter().map(|&k| geometry[k].area).sum();
                EdgePatch { cells, measure }
            })
            .collect::<Vec<_>>();

        let mut vertex_patches = vec![Vec::new(); nv];
        for (k, cell) in cells.iter().enumerate() {
            for &v in cell {
                vertex_patches[v].push(k);
            }
        }

        let is_boundary_edge: Vec<bool> = edge_patches.iter().map(|p| p.cells.len() == 1).collect();
        let boundary_edges: Vec<usize> = (0..edges.len()).filter(|&e| is_boundary_edge[e]).collect();
        let mut is_boundary_vertex = vec![false; nv];
        for &e in &boundary_edges {
            is_boundary_vertex[edges[e][0]] = true;
            is_boundary_vertex[edges[e][1]] = true;
        }
        let boundary_vertices = (0..nv).filter(|&v| is_boundary_vertex[v]).collect();
        let interior_vertices = (0..nv).filter(|&v| !is_boundary_vertex[v]).collect();

        Ok(SimplicialMesh {
            id: MeshId::fresh(),
            vertices,
            cells,
            edges,
            cell_edges,
            edge_patches,
            vertex_patches,
            boundary_edges,
            is_boundary_edge,
            boundary_vertices,
            interior_vertices,
            is_boundary_vertex,
            geometry,
            edge_lookup,
        })
    }

    pub fn id(&self) -> MeshId {
        self.id
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn cell_edges(&self) -> &[[usize; 3]] {
        &self.cell_edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_patch(&self, e: usize) -> &EdgePatch {
        &self.edge_patches[e]
    }

    pub fn vertex_patch(&self, v: usize) -> &[usize] {
        &self.vertex_patches[v]
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.is_boundary_edge[e]
    }

    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn interior_vertices(&self) -> &[usize] {
        &self.interior_vertices
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.is_boundary_vertex[v]
    }

    pub fn geometry(&self, k: usize) -> CellGeometry {
        self.geometry[k]
    }

    /// Index of the edge joining `i` and `j`, in either order.
    pub fn find_edge(&self, i: usize, j: usize) -> Option<usize> {
        self.edge_lookup.get(&(i.min(j), i.max(j))).copied()
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [i, j] = self.edges[e];
        let (a, b) = (self.vertices[i], self.vertices[j]);
        [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
    }

    pub fn cell_points(&self, k: usize) -> [Point; 3] {
        let c = self.cells[k];
        [self.vertices[c[0]], self.vertices[c[1]], self.vertices[c[2]]]
    }

    /// Physical point of barycentric coordinates `bary` in cell `k`.
    pub fn map_point(&self, k: usize, bary: [f64; 3]) -> Point {
        let p = self.cell_points(k);
        [
            bary[0] * p[0][0] + bary[1] * p[1][0] + bary[2] * p[2][0],
            bary[0] * p[0][1] + bary[1] * p[1][1] + bary[2] * p[2][1],
        ]
    }

    /// Constant gradients of the three barycentric coordinates of cell `k`.
    pub fn barycentric_gradients(&self, k: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.cell_points(k);
        let twice_area = 2.0 * self.geometry[k].area;
        [
            [(b[1] - c[1]) / twice_area, (c[0] - b[0]) / twice_area],
            [(c[1] - a[1]) / twice_area, (a[0] - c[0]) / twice_area],
            [(a[1] - b[1]) / twice_area, (b[0] - a[0]) / twice_area],
        ]
    }

    /// Total area of all cells.
    pub fn area(&self) -> f64 {
        self.geometry.iter().map(|g| g.area).sum()
    }

    pub fn metrics(&self) -> MeshMetrics {
        let mut h: f64 = 0.0;
        let mut theta: f64 = 0.0;
        for g in &self.geometry {
            h = h.max(g.diameter);
            theta = theta.max(g.diameter / g.rho);
        }
        MeshMetrics { h, theta }
    }

    pub fn patch_stats(&self, e: usize) -> Result<PatchStats, MeshError> {
        let patch = self.edge_patches.get(e).ok_or(MeshError::InvalidEdge(e))?;
        let mut pts: Vec<usize> = patch.cells.iter().flat_map(|&k| self.cells[k]).collect();
        pts.sort_unstable();
        pts.dedup();
        let mut diameter: f64 = 0.0;
        for (a, &p) in pts.iter().enumerate() {
            for &q in &pts[a + 1..] {
                diameter = diameter.max(distance(self.vertices[p], self.vertices[q]));
            }
        }
        Ok(PatchStats { cell_count: patch.cells.len(), measure: patch.measure, diameter })
    }

    /// Local slot (0..3) of vertex `v` in cell `k`.
    pub fn local_vertex(&self, k: usize, v: usize) -> Option<usize> {
        self.cells[k].iter().position(|&w| w == v)
    }

    /// Distance from cell `k` to the nearest boundary edge of the mesh.
    pub fn cell_boundary_distance(&self, k: usize) -> f64 {
        let tri = self.cell_points(k);
        let mut best = f64::INFINITY;
        for &e in &self.boundary_edges {
            let [i, j] = self.edges[e];
            let seg = (self.vertices[i], self.vertices[j]);
            for m in 0..3 {
                let side = (tri[m], tri[(m + 1) % 3]);
                best = best.min(segment_distance(side, seg));
            }
        }
        best
    }
}

fn bounding_scale(vertices: &[Point]) -> f64 {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for v in vertices {
        for d in 0..2 {
            lo[d] = lo[d].min(v[d]);
            hi[d] = hi[d].max(v[d]);
        }
    }
    let s = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if s.is_finite() && s > 0.0 {
        s
    } else {
        1.0
    }
}

pub(crate) fn point_segment_distance(p: Point, (a, b): (Point, Point)) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    distance(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

fn segments_cross(s: (Point, Point), t: (Point, Point)) -> bool {
    let o = |a: Point, b: Point, c: Point| signed_area(a, b, c);
    let d1 = o(t.0, t.1, s.0);
    let d2 = o(t.0, t.1, s.1);
    let d3 = o(s.0, s.1, t.0);
    let d4 = o(s.0, s.1, t.1);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

pub(crate) fn segment_distance(s: (Point, Point), t: (Point, Point)) -> f64 {
    if segments_cross(s, t) {
        return 0.0;
    }
    point_segment_distance(s.0, t)
        .min(point_segment_distance(s.1, t))
        .min(point_segment_distance(t.0, s))
        .min(point_segment_distance(t.1, s))
}
