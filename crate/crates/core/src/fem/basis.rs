//! Nodal P1 and P2 shape functions on a triangle, in barycentric form.
//!
//! P2 local ordering: the three vertex functions `l_a (2 l_a - 1)` followed
//! by the three edge functions `4 l_b l_c`, edge `k` being opposite vertex `k`.

/// Local vertices of the edge opposite local vertex `k`.
pub const EDGE_VERTICES: [[usize; 2]; 3] = [[1, 2], [2, 0], [0, 1]];

/// Barycentric coordinates of the six P2 nodes (vertices, then edge midpoints).
pub const P2_NODES: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
    [0.5, 0.5, 0.0],
];

pub fn p1_values(bary: [f64; 3]) -> [f64; 3] {
    bary
}

pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
        4.0 * l[0] * l[1],
    ]
}

/// Physical gradients of the six P2 functions given the barycentric
/// gradients `dl` of the cell.
pub fn p2_gradients(l: [f64; 3], dl: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut g = [[0.0; 2]; 6];
    for a in 0..3 {
        let s = 4.0 * l[a] - 1.0;
        g[a] = [s * dl[a][0], s * dl[a][1]];
    }
    for k in 0..3 {
        let [b, c] = EDGE_VERTICES[k];
        g[3 + k] = [
            4.0 * (l[b] * dl[c][0] + l[c] * dl[b][0]),
            4.0 * (l[b] * dl[c][1] + l[c] * dl[b][1]),
        ];
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p1_barycenter() {
        let t = 1.0 / 3.0;
        assert_eq!(p1_values([t, t, t]), [t, t, t]);
    }

    #[test]
    fn p2_kronecker_property() {
        for (i, node) in P2_NODES.iter().enumerate() {
            let v = p2_values(*node);
            for (j, vj) in v.iter().enumerate() {
                assert_eq!(*vj, if i == j { 1.0 } else { 0.0 }, "phi_{j} at node {i}");
            }
        }
    }

    #[test]
    fn p2_partition_of_unity() {
        for &(a, b) in &[(0.1, 0.2), (0.3, 0.3), (0.0, 0.9), (0.25, 0.5)] {
            let l = [1.0 - a - b, a, b];
            let s: f64 = p2_values(l).iter().sum();
            assert!((s - 1.0).abs() < 1e-15);
            let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
            let g = p2_gradients(l, &dl);
            let gs = g.iter().fold([0.0, 0.0], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
            assert!(gs[0].abs() < 1e-14 && gs[1].abs() < 1e-14);
        }
    }

    #[test]
    fn p2_gradients_match_finite_differences() {
        // reference triangle: l1 = x, l2 = y
        let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
        let (x, y) = (0.21, 0.37);
        let eps = 1e-6;
        let f = |x: f64, y: f64| p2_values([1.0 - x - y, x, y]);
        let g = p2_gradients([1.0 - x - y, x, y], &dl);
        for i in 0..6 {
            let gx = (f(x + eps, y)[i] - f(x - eps, y)[i]) / (2.0 * eps);
            let gy = (f(x, y + eps)[i] - f(x, y - eps)[i]) / (2.0 * eps);
            assert!((gx - g[i][0]).abs() < 1e-8 && (gy - g[i][1]).abs() < 1e-8);
        }
    }
}
