//! Post-processing of runs: time-reconstruction norms and the diagnostics
//! table.

use std::collections::HashMap;
use std::io::Write;

use super::{SchemeError, StepDiagnostics, Trajectory};
use crate::fem::Operators;
use crate::interp::ANALYTIC_QUADRATURE_DEGREE;
use crate::mesh::Point;
use crate::quadrature::{gauss3_interval, QuadratureRule};

pub const DIAGNOSTICS_HEADER: &str = "n,t,energy_residual,u_l2,ut_l2,ut_h1,gradp_l2,gap_l2,pred_iters,corr_iters";

pub fn write_diagnostics_csv<W: Write>(diags: &[StepDiagnostics], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{DIAGNOSTICS_HEADER}")?;
    for d in diags {
        writeln!(
            out,
            "{},{:.10e},{:.6e},{:.10e},{:.10e},{:.10e},{:.10e},{:.10e},{},{}",
            d.n,
            d.t,
            d.energy_residual,
            d.u_l2,
            d.ut_l2,
            d.ut_h1,
            d.gradp_l2,
            d.gap_l2,
            d.prediction.iterations,
            d.correction.iterations
        )?;
    }
    Ok(())
}

/// `|u_N - u_tilde_N|` in L2(0,T;L2) for the piecewise-constant
/// reconstructions, from the per-step gaps.
pub fn gap_l2l2(diags: &[StepDiagnostics], dt: f64) -> f64 {
    diags.iter().map(|d| dt * d.gap_l2 * d.gap_l2).sum::<f64>().sqrt()
}

/// Index of the step whose interval `(t^n, t^{n+1}]` contains `t`.
fn interval_index(t: f64, dt: f64, steps: usize) -> usize {
    let k = (t / dt).ceil() as isize - 1;
    k.clamp(0, steps as isize - 1) as usize
}

/// `int_0^{T - tau} |u_tilde_N(t + tau) - u_tilde_N(t)|^2 dt`, evaluated
/// exactly on the piecewise-constant reconstruction.
pub fn time_translate_diagnostic(ops: &Operators, traj: &Trajectory, tau: f64) -> Result<f64, SchemeError> {
    let fields = traj.predicted();
    let steps = fields.len();
    let dt = traj.dt;
    let total = dt * steps as f64;
    if steps == 0 || !(tau > 0.0 && tau < total) {
        return Err(SchemeError::Config(format!("translate must lie in (0, {total}), got {tau}")));
    }
    let end = total - tau;
    let mut breaks: Vec<f64> = vec![0.0, end];
    for n in 0..=steps {
        let t = n as f64 * dt;
        for b in [t, t - tau] {
            if b > 0.0 && b < end {
                breaks.push(b);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * total);

    let mut cache: HashMap<(usize, usize), f64> = HashMap::new();
    let mut sum = 0.0;
    for w in breaks.windows(2) {
        let len = w[1] - w[0];
        if len <= 0.0 {
            continue;
        }
        let mid = 0.5 * (w[0] + w[1]);
        let a = interval_index(mid + tau, dt, steps);
        let b = interval_index(mid, dt, steps);
        if a == b {
            continue;
        }
        let sq = match cache.get(&(a, b)) {
            Some(&v) => v,
            None => {
                let d = fields[a].axpy(-1.0, fields[b]);
                let v = ops.mass.bilinear(&d.coeffs, &d.coeffs);
                cache.insert((a, b), v);
                v
            }
        };
        sum += len * sq;
    }
    Ok(sum)
}

/// `|u_tilde_N - u_exact|` in L2(0,T;L2): three Gauss points per step in
/// time, a high-order rule per cell in space.
pub fn velocity_error_l2l2(ops: &Operators, traj: &Trajectory, exact: &dyn Fn(Point, f64) -> [f64; 2]) -> f64 {
    let space = ops.velocity();
    let mesh = space.mesh();
    let rule = QuadratureRule::collapsed_gauss(ANALYTIC_QUADRATURE_DEGREE);
    let dt = traj.dt;
    let mut total = 0.0;
    for (n, field) in traj.predicted().into_iter().enumerate() {
        let times = gauss3_interval(n as f64 * dt, (n + 1) as f64 * dt);
        for k in 0..mesh.num_cells() {
            let area = mesh.geometry(k).area;
            for (l, w) in rule.points.iter().zip(&rule.weights) {
                let x = mesh.map_point(k, *l);
                let (uh, _) = space.eval(field, k, *l);
                for &(t, wt) in &times {
                    let ue = exact(x, t);
                    total += dt * wt * area * w * ((uh[0] - ue[0]).powi(2) + (uh[1] - ue[1]).powi(2));
                }
            }
        }
    }
    total.sqrt()
}
