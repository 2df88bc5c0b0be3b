use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix6, Vector6};

use super::*;
use crate::interp::{pi_n, CurlField, PiNStatus};
use crate::mesh::{build_pathological_mesh, PathologicalKind};
use crate::mesh::SimplicialMesh;
use crate::problems;
use crate::quadrature::QuadratureRule;

fn ops(n: usize) -> Arc<Operators> {
    Arc::new(Operators::new(Arc::new(SimplicialMesh::structured_unit_square(n).unwrap())))
}

fn zero_field(_: Point) -> [f64; 2] {
    [0.0, 0.0]
}

fn zero_forcing(_: Point, _: f64) -> [f64; 2] {
    [0.0, 0.0]
}

fn mms_run(n: usize, steps: usize, final_time: f64, store: bool) -> (Arc<Operators>, RunOutput) {
    let ops = ops(n);
    let config = SchemeConfig { store_trajectory: store, ..SchemeConfig::new(steps, final_time) };
    let scheme = Scheme::new(ops.clone(), config).unwrap();
    let out = scheme.run(&problems::initial_velocity, &problems::forcing).unwrap();
    (ops, out)
}

#[test]
fn zero_data_stays_zero() {
    let ops = ops(4);
    let scheme = Scheme::new(ops, SchemeConfig::new(4, 1.0)).unwrap();
    let out = scheme.run(&zero_field, &zero_forcing).unwrap();
    assert_eq!(out.diagnostics.len(), 4);
    for d in &out.diagnostics {
        assert!(d.energy_residual <= 1e-14);
        for v in [d.u_l2, d.ut_l2, d.ut_h1, d.gradp_l2, d.gap_l2, d.max_moment] {
            assert!(v.abs() <= 1e-14);
        }
    }
    assert!(out.final_state.u_tilde.coeffs.iter().all(|&c| c == 0.0));
    assert!(out.final_state.p.values.iter().all(|&c| c == 0.0));
}

/// Monomial coefficients (1, x, y, x^2, xy, y^2) of the six local
/// quadratic Lagrange functions of a triangle, from its nodes.
fn local_basis(pts: [Point; 3]) -> Matrix6<f64> {
    let mid = |a: Point, b: Point| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let nodes = [pts[0], pts[1], pts[2], mid(pts[1], pts[2]), mid(pts[2], pts[0]), mid(pts[0], pts[1])];
    let mut v = Matrix6::zeros();
    for (r, p) in nodes.iter().enumerate() {
        let m = [1.0, p[0], p[1], p[0] * p[0], p[0] * p[1], p[1] * p[1]];
        for c in 0..6 {
            v[(r, c)] = m[c];
        }
    }
    v.try_inverse().unwrap()
}

fn basis_at(coef: &Matrix6<f64>, p: Point) -> ([f64; 6], [[f64; 2]; 6]) {
    let (x, y) = (p[0], p[1]);
    let mut val = [0.0; 6];
    let mut grad = [[0.0; 2]; 6];
    for i in 0..6 {
        let c: Vector6<f64> = coef.column(i).into();
        val[i] = c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y;
        grad[i] = [c[1] + 2.0 * c[3] * x + c[4] * y, c[2] + c[4] * x + 2.0 * c[5] * y];
    }
    (val, grad)
}

#[test]
fn first_step_matches_dense_heat_step() {
    let n = 3;
    let ops = ops(n);
    let dt = 0.1;
    let f = |p: Point, _t: f64| [p[0] * p[1] + 1.0, p[0] - p[1] * p[1]];
    let scheme = Scheme::new(ops.clone(), SchemeConfig::new(1, dt)).unwrap();
    let (state, _) = scheme.initialize(&zero_field).unwrap();
    let (ut, _, _) = scheme.predict(&state, &f).unwrap();

    let space = ops.velocity();
    let mesh = space.mesh();
    let ns = space.scalar_dim();
    let dim = 2 * ns;
    let rule = QuadratureRule::collapsed_gauss(8);
    let mut sys = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);
    for k in 0..mesh.num_cells() {
        let coef = local_basis(mesh.cell_points(k));
        let dofs = space.cell_dofs(k);
        let area = mesh.geometry(k).area;
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let x = mesh.map_point(k, *l);
            let (val, grad) = basis_at(&coef, x);
            let fx = f(x, 0.0);
            let wq = area * w;
            for i in 0..6 {
                for c in 0..2 {
                    rhs[c * ns + dofs[i]] += wq * fx[c] * val[i];
                }
                for j in 0..6 {
                    let m = val[i] * val[j] / dt + grad[i][0] * grad[j][0] + grad[i][1] * grad[j][1];
                    for c in 0..2 {
                        sys[(c * ns + dofs[i], c * ns + dofs[j])] += wq * m;
                    }
                }
            }
        }
    }
    let free = space.free_dofs();
    let a = DMatrix::from_fn(free.len(), free.len(), |r, c| sys[(free[r], free[c])]);
    let b = DVector::from_fn(free.len(), |r, _| rhs[free[r]]);
    let x = a.lu().solve(&b).unwrap();
    let scale = x.amax();
    for (r, &i) in free.iter().enumerate() {
        assert!((ut.coeffs[i] - x[r]).abs() <= 1e-9 * scale, "dof {i}: {} vs {}", ut.coeffs[i], x[r]);
    }
    assert!(space.is_in_x(&ut));
}

#[test]
fn mms_step_identities_hold() {
    let (ops, out) = mms_run(4, 10, 1.0, false);
    for d in &out.diagnostics {
        assert!(d.energy_residual <= 1e-8, "step {}: {}", d.n, d.energy_residual);
        assert!(d.prediction_residual <= 1e-9, "step {}: {}", d.n, d.prediction_residual);
        assert!(d.max_moment <= 1e-10, "step {}: {}", d.n, d.max_moment);
        assert!(d.pythagoras_cross.abs() <= 1e-10 * d.ut_l2.powi(2).max(1e-30));
        assert!(d.prediction.converged && d.correction.converged);
        for v in [d.u_l2, d.ut_l2, d.ut_h1, d.gradp_l2, d.gap_l2] {
            assert!(v >= 0.0 && v.is_finite());
        }
    }
    let p = &out.final_state.p;
    let pnorm = crate::fem::assembly::mass_p1(ops.pressure()).bilinear(&p.values, &p.values).sqrt();
    assert!(ops.mean(p).unwrap().abs() <= 1e-12 * pnorm.max(1e-300));
    assert!(out.diagnostics.last().unwrap().gradp_l2 > 0.0);
}

#[test]
fn pythagoras_splits_the_prediction() {
    let ops = ops(4);
    let dt = 0.1;
    let scheme = Scheme::new(ops.clone(), SchemeConfig::new(5, 0.5)).unwrap();
    let (mut state, _) = scheme.initialize(&problems::initial_velocity).unwrap();
    for _ in 0..5 {
        let (ut, _, _) = scheme.predict(&state, &problems::forcing).unwrap();
        let (dp, p, u, _) = scheme.correct(&state, &ut).unwrap();
        let ut_sq = ops.l2_norm(&ut).unwrap().powi(2);
        let u_sq = ops.composite_norm_sq(&u).unwrap();
        let gdp_sq = ops.grad_norm(&dp).unwrap().powi(2);
        let cross = 2.0 * dt * dot(&dp.values, &ops.weak_div_moments(&u).unwrap());
        assert!(cross.abs() <= 1e-10 * ut_sq);
        assert!((ut_sq - (u_sq + dt * dt * gdp_sq + cross)).abs() <= 1e-12 * ut_sq);
        state = SchemeState { n: state.n + 1, t: state.t + dt, u_tilde: ut, u, p };
    }
}

#[test]
fn runs_are_bit_identical() {
    let (_, a) = mms_run(4, 3, 0.3, false);
    let (_, b) = mms_run(4, 3, 0.3, false);
    assert_eq!(a.diagnostics, b.diagnostics);
    let (sa, sb) = (&a.final_state, &b.final_state);
    assert_eq!(sa.u_tilde.coeffs, sb.u_tilde.coeffs);
    assert_eq!(sa.u.grad_part.values, sb.u.grad_part.values);
    assert_eq!(sa.p.values, sb.p.values);
}

#[test]
fn single_step_run_equals_step() {
    let ops = ops(4);
    let scheme = Scheme::new(ops, SchemeConfig::new(1, 0.2)).unwrap();
    let out = scheme.run(&problems::initial_velocity, &problems::forcing).unwrap();
    let (s0, _) = scheme.initialize(&problems::initial_velocity).unwrap();
    let (s1, d1) = scheme.step(&s0, &problems::forcing).unwrap();
    assert_eq!(out.final_state, s1);
    assert_eq!(out.diagnostics, vec![d1]);
    assert_eq!(s1.n, 1);
    assert!((s1.t - 0.2).abs() < 1e-15);
}

#[test]
fn gradient_initial_field_is_projected() {
    let ops = ops(6);
    let scheme = Scheme::new(ops.clone(), SchemeConfig::new(1, 1.0)).unwrap();
    let grad_xi = |_: Point| [0.7, -0.3];
    let (state, report) = scheme.initialize(&grad_xi).unwrap();
    assert!(report.converged);
    let moments = ops.weak_div_moments(&state.u).unwrap();
    assert!(moments.iter().all(|m| m.abs() <= 1e-10));
    let before = ops.l2_norm(&ops.velocity().interpolate(grad_xi)).unwrap();
    let after = ops.composite_norm(&state.u).unwrap();
    assert!(after <= before * (1.0 + 1e-12));
    assert!(after < 0.9 * before);
    assert!(state.u_tilde.coeffs.iter().all(|&c| c == 0.0));
    assert!(state.p.values.iter().all(|&c| c == 0.0));
}

#[test]
fn discretely_solenoidal_initial_field_is_a_fixed_point() {
    let ops = ops(8);
    let r = pi_n(ops.velocity(), &CurlField::compact_box(0.25, 0.75)).unwrap();
    assert_eq!(r.status, PiNStatus::Corrected);
    let scheme = Scheme::new(ops.clone(), SchemeConfig::new(1, 1.0)).unwrap();
    let (state, _) = scheme.initialize_from_field(r.field.clone()).unwrap();
    let scale = r.field.max_abs();
    assert!(state.u.grad_part.values.iter().all(|&v| v.abs() <= 1e-10 * scale));
    assert_eq!(state.u.p2_part, r.field);

    let (dp, _, u, _) = scheme.correct(&state, &r.field).unwrap();
    assert!(dp.values.iter().all(|&v| v.abs() <= 1e-9 * scale));
    assert_eq!(u.p2_part, r.field);
}

#[test]
fn pathological_mesh_steps_converge() {
    let pm = build_pathological_mesh(PathologicalKind::AllBoundaryCell { triangles: 1 }).unwrap();
    let ops = Arc::new(Operators::new(Arc::new(pm.mesh)));
    let scheme = Scheme::new(ops, SchemeConfig::new(10, 1.0)).unwrap();
    let out = scheme.run(&problems::initial_velocity, &problems::forcing).unwrap();
    assert_eq!(out.diagnostics.len(), 10);
    assert!(out.diagnostics.iter().all(|d| d.prediction.converged && d.correction.converged));
}

#[test]
fn invalid_configs_are_rejected() {
    let ops = ops(2);
    assert!(matches!(Scheme::new(ops.clone(), SchemeConfig::new(0, 1.0)), Err(SchemeError::Config(_))));
    assert!(matches!(Scheme::new(ops.clone(), SchemeConfig::new(2, 0.0)), Err(SchemeError::Config(_))));
    assert!(matches!(Scheme::new(ops.clone(), SchemeConfig::new(2, f64::NAN)), Err(SchemeError::Config(_))));
    let mut c = SchemeConfig::new(2, 1.0);
    c.correction.tol = 0.0;
    assert!(matches!(Scheme::new(ops, c), Err(SchemeError::Config(_))));
}

#[test]
fn gap_norm_sums_step_gaps() {
    let (_, out) = mms_run(4, 4, 1.0, false);
    let direct: f64 = out.diagnostics.iter().map(|d| 0.25 * d.gap_l2.powi(2)).sum::<f64>().sqrt();
    assert!((gap_l2l2(&out.diagnostics, 0.25) - direct).abs() <= 1e-15 * direct.max(1e-300));
    assert!(direct > 0.0);
}

#[test]
fn translate_of_constant_trajectory_vanishes() {
    let ops = ops(3);
    let field = ops.velocity().interpolate(|p| [p[0] * (1.0 - p[0]), p[1]]);
    let mut state = SchemeState {
        n: 0,
        t: 0.0,
        u_tilde: ops.velocity().zeros(),
        u: CompositeVelocity::from_p2(ops.velocity().zeros(), ops.pressure()),
        p: ops.pressure().zeros(),
    };
    let mut states = vec![state.clone()];
    for n in 1..=4 {
        state.n = n;
        state.u_tilde = field.clone();
        states.push(state.clone());
    }
    let traj = Trajectory { dt: 0.25, states };
    for tau in [0.25, 0.1, 0.6] {
        assert_eq!(time_translate_diagnostic(&ops, &traj, tau).unwrap(), 0.0);
    }
    assert!(time_translate_diagnostic(&ops, &traj, 1.0).is_err());
    assert!(time_translate_diagnostic(&ops, &traj, 0.0).is_err());
}

/// Midpoint sum on a fine uniform grid of `[0, T - tau]`, exact for
/// piecewise-constant integrands whose breaks fall on the grid.
fn translate_brute_force(ops: &Operators, traj: &Trajectory, tau: f64, cells: usize) -> f64 {
    let fields = traj.predicted();
    let steps = fields.len();
    let end = traj.dt * steps as f64 - tau;
    let h = end / cells as f64;
    let idx = |t: f64| (((t / traj.dt).ceil() as usize).max(1) - 1).min(steps - 1);
    (0..cells)
        .map(|i| {
            let t = (i as f64 + 0.5) * h;
            let d = fields[idx(t + tau)].axpy(-1.0, fields[idx(t)]);
            h * ops.mass.bilinear(&d.coeffs, &d.coeffs)
        })
        .sum()
}

#[test]
fn translate_matches_brute_force() {
    let (ops, out) = mms_run(4, 2, 1.0, true);
    let traj = out.trajectory.unwrap();
    let dt = traj.dt;
    let exact = time_translate_diagnostic(&ops, &traj, dt).unwrap();
    let f = traj.predicted();
    let d = f[1].axpy(-1.0, f[0]);
    let by_hand = (1.0 - dt) * ops.mass.bilinear(&d.coeffs, &d.coeffs);
    assert!((exact - by_hand).abs() <= 1e-14 * by_hand);

    let (ops, out) = mms_run(4, 8, 1.0, true);
    let traj = out.trajectory.unwrap();
    for (tau, cells) in [(0.25, 600), (0.375, 500), (0.3, 700)] {
        let exact = time_translate_diagnostic(&ops, &traj, tau).unwrap();
        let brute = translate_brute_force(&ops, &traj, tau, cells);
        assert!((exact - brute).abs() <= 1e-10 * exact, "tau {tau}: {exact} vs {brute}");
    }
}

#[test]
fn error_of_exact_zero_solution_vanishes() {
    let ops = ops(4);
    let scheme = Scheme::new(ops.clone(), SchemeConfig { store_trajectory: true, ..SchemeConfig::new(3, 1.0) }).unwrap();
    let out = scheme.run(&zero_field, &zero_forcing).unwrap();
    let traj = out.trajectory.unwrap();
    assert_eq!(traj.states.len(), 4);
    assert_eq!(velocity_error_l2l2(&ops, &traj, &zero_forcing), 0.0);
    let unit = |_: Point, _: f64| [1.0, 0.0];
    assert!((velocity_error_l2l2(&ops, &traj, &unit) - 1.0).abs() < 1e-12);
}

#[test]
fn diagnostics_csv_has_stable_header() {
    let (_, out) = mms_run(2, 2, 1.0, false);
    let mut buf = Vec::new();
    write_diagnostics_csv(&out.diagnostics, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(DIAGNOSTICS_HEADER));
    assert_eq!(lines.clone().count(), 2);
    assert!(lines.next().unwrap().starts_with("1,5.0000000000e-1,"));
}
