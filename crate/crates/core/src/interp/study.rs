use std::io::Write;
use std::sync::Arc;

use super::{lagrange_p2, pi_n, InterpError, PiNStatus, VectorField, ANALYTIC_QUADRATURE_DEGREE};
use crate::fem::{FieldP2Vector, Operators, SpaceP2Vector};
use crate::mesh::{Point, SimplicialMesh};
use crate::quadrature::QuadratureRule;

/// `|grad u|_{L2} + |u|_{L-infinity}`, the max norm sampled per cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EBNormBundle {
    pub h1_seminorm: f64,
    pub linf_estimate: f64,
    pub e_norm: f64,
}

impl EBNormBundle {
    pub fn of(ops: &Operators, u: &FieldP2Vector) -> Result<Self, InterpError> {
        let h1_seminorm = ops.h1_seminorm(u)?;
        let linf_estimate = ops.linf_sample(u)?;
        Ok(EBNormBundle { h1_seminorm, linf_estimate, e_norm: h1_seminorm + linf_estimate })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub n: usize,
    pub h: f64,
    pub status: PiNStatus,
    /// Sampled max of `|Pi_N v - v|`.
    pub err_linf: f64,
    /// Sampled max of the value and gradient errors.
    pub err_w1inf: f64,
    /// Full H1 norm of the error.
    pub err_h1: f64,
    pub e_norm: f64,
    /// `log(err_w1inf(prev) / err_w1inf) / log(h(prev) / h)`.
    pub observed_order: Option<f64>,
}

/// Sampled value and gradient max-errors and the H1 error of a P2 field
/// against a closed-form field.
pub(crate) fn field_errors(space: &SpaceP2Vector, u: &FieldP2Vector, v: &dyn VectorField) -> (f64, f64, f64) {
    let mesh = space.mesh();
    let samples = crate::fem::sample_points();
    let mut err_val: f64 = 0.0;
    let mut err_grad: f64 = 0.0;
    for k in 0..mesh.num_cells() {
        for &l in &samples {
            let x = mesh.map_point(k, l);
            let (uh, gh) = space.eval(u, k, l);
            let (ue, ge) = (v.value(x), v.gradient(x));
            err_val = err_val.max((uh[0] - ue[0]).hypot(uh[1] - ue[1]));
            let g2: f64 = (0..2).flat_map(|c| (0..2).map(move |d| (c, d))).map(|(c, d)| (gh[c][d] - ge[c][d]).powi(2)).sum();
            err_grad = err_grad.max(g2.sqrt());
        }
    }
    let rule = QuadratureRule::collapsed_gauss(ANALYTIC_QUADRATURE_DEGREE);
    let mut h1 = 0.0;
    for k in 0..mesh.num_cells() {
        let area = mesh.geometry(k).area;
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let x = mesh.map_point(k, *l);
            let (uh, gh) = space.eval(u, k, *l);
            let (ue, ge) = (v.value(x), v.gradient(x));
            let mut s = (uh[0] - ue[0]).powi(2) + (uh[1] - ue[1]).powi(2);
            for c in 0..2 {
                for d in 0..2 {
                    s += (gh[c][d] - ge[c][d]).powi(2);
                }
            }
            h1 += area * w * s;
        }
    }
    (err_val, err_val.max(err_grad), h1.sqrt())
}

/// Composite interpolation on structured meshes of the unit square with
/// `n` subdivisions for each entry of `ns`.
pub fn pi_n_convergence_study(v: &dyn VectorField, ns: &[usize]) -> Result<Vec<StudyRow>, InterpError> {
    let mut rows: Vec<StudyRow> = Vec::with_capacity(ns.len());
    for &n in ns {
        let ops = Operators::new(Arc::new(SimplicialMesh::structured_unit_square(n)?));
        let r = pi_n(ops.velocity(), v)?;
        let (err_linf, err_w1inf, err_h1) = field_errors(ops.velocity(), &r.field, v);
        let e_norm = EBNormBundle::of(&ops, &r.field)?.e_norm;
        let h = ops.mesh().metrics().h;
        let observed_order = rows.last().map(|p| (p.err_w1inf / err_w1inf).ln() / (p.h / h).ln());
        rows.push(StudyRow { n, h, status: r.status, err_linf, err_w1inf, err_h1, e_norm, observed_order });
    }
    Ok(rows)
}

pub fn write_study_csv<W: Write>(rows: &[StudyRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "n,h,status,err_linf,err_w1inf,err_h1,e_norm,observed_order")?;
    for r in rows {
        let order = r.observed_order.map(|o| format!("{o:.6}")).unwrap_or_default();
        writeln!(
            out,
            "{},{:.10e},{},{:.10e},{:.10e},{:.10e},{:.10e},{}",
            r.n,
            r.h,
            r.status.as_str(),
            r.err_linf,
            r.err_w1inf,
            r.err_h1,
            r.e_norm,
            order
        )?;
    }
    Ok(())
}

/// Observed ratio `|Pi_L v|_inf / |grad v|_inf`, both sampled per cell.
pub fn lagrange_linf_constant(space: &SpaceP2Vector, v: &dyn VectorField) -> f64 {
    let li = lagrange_p2(v, space);
    let mesh = space.mesh();
    let mut num: f64 = 0.0;
    let mut den: f64 = 0.0;
    for k in 0..mesh.num_cells() {
        for l in crate::fem::sample_points() {
            let (u, _) = space.eval(&li, k, l);
            num = num.max(u[0].hypot(u[1]));
            let g = v.gradient(mesh.map_point(k, l));
            let gn = (g[0][0].powi(2) + g[0][1].powi(2) + g[1][0].powi(2) + g[1][1].powi(2)).sqrt();
            den = den.max(gn);
        }
    }
    num / den
}

fn box_distance(p: Point, lo: Point, hi: Point) -> f64 {
    let dx = (lo[0] - p[0]).max(0.0).max(p[0] - hi[0]);
    let dy = (lo[1] - p[1]).max(0.0).max(p[1] - hi[1]);
    dx.hypot(dy)
}

/// Edges carrying a nonzero correction coefficient whose patch lies
/// farther than `inflate` from the support box `[lo, hi]`.
pub fn support_locality_violations(mesh: &SimplicialMesh, coeffs: &[f64], support: [Point; 2], inflate: f64) -> Vec<usize> {
    (0..mesh.num_edges())
        .filter(|&e| coeffs[e] != 0.0)
        .filter(|&e| {
            let near = mesh.edge_patch(e).cells.iter().any(|&k| {
                mesh.cell_points(k).iter().any(|&p| box_distance(p, support[0], support[1]) <= inflate)
            });
            !near
        })
        .collect()
}
