use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use projnav::fem::assembly::divergence_matrix;
use projnav::fem::Operators;
use projnav::interp::{
    divergence_correct_field, edge_bubble, pi_n, pi_n_convergence_study, random_interior_field, write_study_csv,
    CurlField,
};
use projnav::mesh::{build_pathological_mesh, read_mesh_file, write_mesh_file, PathologicalKind, Point, SimplicialMesh};
use projnav::problems;
use projnav::scheme::{
    gap_l2l2, velocity_error_l2l2, write_diagnostics_csv, RunOutput, Scheme, SchemeConfig, SchemeState, StepDiagnostics,
};
use projnav::sparse::SolverOptions;

use crate::config::{MeshSpec, Problem, RunConfig};
use crate::error::CliError;
use crate::vtk::{write_vtk, VtkFields};

pub const MMS_HEADER: &str = "n,h,steps,dt,err_l2l2,gap_l2l2,max_energy_residual,max_moment,observed_order";
pub const AUDIT_HEADER: &str =
    "n,t,energy_lhs,energy_rhs,energy_residual,prediction_residual,pythagoras_cross,max_moment,pressure_mean";
pub const REPORT_HEADER: &str = "check,mesh,status,max_residual,limit,pass";

pub fn seed() -> u64 {
    std::env::var("PROJNAV_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(42)
}

fn build_mesh(spec: &MeshSpec) -> Result<SimplicialMesh, CliError> {
    Ok(match spec {
        MeshSpec::Structured { n } => SimplicialMesh::structured_unit_square(*n)?,
        MeshSpec::File { path } => {
            read_mesh_file(path).map_err(|e| CliError::Data(format!("mesh file {}: {e}", path.display())))?
        }
        MeshSpec::AllBoundaryCell { triangles } => {
            build_pathological_mesh(PathologicalKind::AllBoundaryCell { triangles: *triangles })?.mesh
        }
        MeshSpec::BoundaryStrip { n, omega } => {
            build_pathological_mesh(PathologicalKind::BoundaryStrip { n: *n, omega: *omega })?.mesh
        }
    })
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    Ok((path.clone(), BufWriter::new(File::create(path)?)))
}

fn scheme_config(cfg: &RunConfig, steps: usize, store: bool) -> SchemeConfig {
    SchemeConfig {
        steps,
        final_time: cfg.final_time,
        prediction: SolverOptions { tol: cfg.pred_tol, max_iter: cfg.max_iter, jacobi: false },
        correction: SolverOptions { tol: cfg.corr_tol, max_iter: cfg.max_iter, jacobi: false },
        convection: cfg.problem != Problem::StokesLimit,
        audit: true,
        store_trajectory: store,
    }
}

type Data = (fn(Point) -> [f64; 2], fn(Point, f64) -> [f64; 2], Option<fn(Point, f64) -> [f64; 2]>);

fn zero_velocity(_: Point) -> [f64; 2] {
    [0.0, 0.0]
}

fn zero_forcing(_: Point, _: f64) -> [f64; 2] {
    [0.0, 0.0]
}

/// Initial velocity, forcing and exact velocity of a problem.
fn problem_data(p: Problem) -> Data {
    match p {
        Problem::Mms => (problems::initial_velocity, problems::forcing, Some(problems::velocity)),
        Problem::StokesLimit => (problems::initial_velocity, problems::stokes_forcing, Some(problems::velocity)),
        Problem::Zero => (zero_velocity, zero_forcing, Some(zero_forcing)),
    }
}

fn write_fields(ops: &Operators, dir: &Path, state: &SchemeState) -> Result<PathBuf, CliError> {
    let (path, mut w) = create(dir, &format!("fields_{:04}.vtk", state.n))?;
    let fields = VtkFields {
        point_vectors: vec![("predicted_velocity", &state.u_tilde)],
        point_scalars: vec![("pressure", &state.p)],
        composites: vec![("velocity", &state.u)],
    };
    write_vtk(ops.velocity(), &format!("step {} t = {:.6}", state.n, state.t), &fields, &mut w)?;
    w.flush()?;
    Ok(path)
}

fn max_of(diags: &[StepDiagnostics], f: impl Fn(&StepDiagnostics) -> f64) -> f64 {
    diags.iter().map(f).fold(0.0, f64::max)
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

pub fn cmd_mesh(cfg: &RunConfig) -> Result<Value, CliError> {
    let mesh = Arc::new(build_mesh(&cfg.mesh)?);
    std::fs::create_dir_all(&cfg.out)?;
    let mesh_path = cfg.out.join("mesh.txt");
    write_mesh_file(&mesh, &mesh_path)?;
    let ops = Operators::new(mesh.clone());
    let (vtk_path, mut w) = create(&cfg.out, "mesh.vtk")?;
    write_vtk(ops.velocity(), "mesh", &VtkFields::default(), &mut w)?;
    w.flush()?;
    let m = mesh.metrics();
    Ok(json!({
        "vertices": mesh.num_vertices(),
        "cells": mesh.num_cells(),
        "edges": mesh.num_edges(),
        "boundary_edges": mesh.boundary_edges().len(),
        "interior_vertices": mesh.interior_vertices().len(),
        "h": m.h,
        "theta": m.theta,
        "area": mesh.area(),
        "outputs": [path_str(&mesh_path), path_str(&vtk_path)],
    }))
}

struct RunResult {
    ops: Arc<Operators>,
    out: RunOutput,
    fields: Vec<PathBuf>,
}

fn simulate(cfg: &RunConfig, emit: bool) -> Result<RunResult, CliError> {
    let ops = Arc::new(Operators::new(Arc::new(build_mesh(&cfg.mesh)?)));
    let (u0, f, _) = problem_data(cfg.problem);
    let scheme = Scheme::new(ops.clone(), scheme_config(cfg, cfg.steps, true))?;
    let mut fields = Vec::new();
    let mut write_error = None;
    let out = scheme.run_with(&u0, &f, |state, _| {
        if emit && write_error.is_none() {
            match write_fields(&ops, &cfg.out, state) {
                Ok(p) => fields.push(p),
                Err(e) => write_error = Some(e),
            }
        }
    })?;
    if let Some(e) = write_error {
        return Err(e);
    }
    if emit {
        fields.insert(0, write_fields(&ops, &cfg.out, &out.initial)?);
    }
    Ok(RunResult { ops, out, fields })
}

pub fn cmd_run(cfg: &RunConfig) -> Result<Value, CliError> {
    let RunResult { ops, out, fields } = simulate(cfg, cfg.emit_fields)?;
    let (csv_path, mut w) = create(&cfg.out, "diagnostics.csv")?;
    write_diagnostics_csv(&out.diagnostics, &mut w)?;
    w.flush()?;
    let (_, _, exact) = problem_data(cfg.problem);
    let traj = out.trajectory.as_ref().expect("trajectory is stored");
    let error = exact.map(|e| velocity_error_l2l2(&ops, traj, &e));
    let last = out.diagnostics.last().expect("at least one step");
    let mut outputs = vec![path_str(&csv_path)];
    outputs.extend(fields.iter().map(|p| path_str(p)));
    Ok(json!({
        "problem": cfg.problem.as_str(),
        "steps": cfg.steps,
        "final_time": cfg.final_time,
        "max_energy_residual": max_of(&out.diagnostics, |d| d.energy_residual),
        "max_moment": max_of(&out.diagnostics, |d| d.max_moment),
        "final_u_l2": last.u_l2,
        "final_gradp_l2": last.gradp_l2,
        "gap_l2l2": gap_l2l2(&out.diagnostics, cfg.final_time / cfg.steps as f64),
        "velocity_error_l2l2": error,
        "outputs": outputs,
    }))
}

pub fn cmd_energy_audit(cfg: &RunConfig) -> Result<Value, CliError> {
    let RunResult { out, .. } = simulate(cfg, false)?;
    let (csv_path, mut w) = create(&cfg.out, "energy_audit.csv")?;
    writeln!(w, "{AUDIT_HEADER}")?;
    for d in &out.diagnostics {
        writeln!(
            w,
            "{},{:.10e},{:.16e},{:.16e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e}",
            d.n,
            d.t,
            d.energy_lhs,
            d.energy_rhs,
            d.energy_residual,
            d.prediction_residual,
            d.pythagoras_cross,
            d.max_moment,
            d.pressure_mean
        )?;
    }
    w.flush()?;
    let energy = max_of(&out.diagnostics, |d| d.energy_residual);
    let moment = max_of(&out.diagnostics, |d| d.max_moment);
    let mut failed = Vec::new();
    if energy > cfg.energy_limit {
        failed.push(format!("energy residual {energy:.3e} exceeds {:.1e}", cfg.energy_limit));
    }
    if moment > cfg.moment_limit {
        failed.push(format!("weak-divergence moment {moment:.3e} exceeds {:.1e}", cfg.moment_limit));
    }
    if !failed.is_empty() {
        return Err(CliError::Checks { failed });
    }
    Ok(json!({
        "steps": cfg.steps,
        "max_energy_residual": energy,
        "max_prediction_residual": max_of(&out.diagnostics, |d| d.prediction_residual),
        "max_moment": moment,
        "outputs": [path_str(&csv_path)],
    }))
}

struct MmsRow {
    n: usize,
    h: f64,
    steps: usize,
    error: f64,
    gap: f64,
    energy: f64,
    moment: f64,
}

fn mms_level(cfg: &RunConfig, n: usize) -> Result<MmsRow, CliError> {
    let steps = ((cfg.steps_per_n * n as f64).round() as usize).max(1);
    let ops = Arc::new(Operators::new(Arc::new(SimplicialMesh::structured_unit_square(n)?)));
    let (u0, f, exact) = problem_data(cfg.problem);
    let scheme = Scheme::new(ops.clone(), scheme_config(cfg, steps, true))?;
    let out = scheme.run(&u0, &f)?;
    let traj = out.trajectory.as_ref().expect("trajectory is stored");
    let error = exact.map_or(0.0, |e| velocity_error_l2l2(&ops, traj, &e));
    Ok(MmsRow {
        n,
        h: ops.mesh().metrics().h,
        steps,
        error,
        gap: gap_l2l2(&out.diagnostics, cfg.final_time / steps as f64),
        energy: max_of(&out.diagnostics, |d| d.energy_residual),
        moment: max_of(&out.diagnostics, |d| d.max_moment),
    })
}

pub fn cmd_mms(cfg: &RunConfig) -> Result<Value, CliError> {
    let results: Vec<Result<MmsRow, CliError>> = std::thread::scope(|s| {
        let handles: Vec<_> = cfg.refinements.iter().map(|&n| s.spawn(move || mms_level(cfg, n))).collect();
        handles.into_iter().map(|h| h.join().expect("refinement level panicked")).collect()
    });
    let rows = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let (csv_path, mut w) = create(&cfg.out, "convergence.csv")?;
    writeln!(w, "{MMS_HEADER}")?;
    let mut orders = Vec::new();
    for (i, r) in rows.iter().enumerate() {
        let order = (i > 0).then(|| (rows[i - 1].error / r.error).ln() / (rows[i - 1].h / r.h).ln());
        orders.push(order);
        writeln!(
            w,
            "{},{:.10e},{},{:.10e},{:.10e},{:.10e},{:.6e},{:.6e},{}",
            r.n,
            r.h,
            r.steps,
            cfg.final_time / r.steps as f64,
            r.error,
            r.gap,
            r.energy,
            r.moment,
            order.map(|o| format!("{o:.6}")).unwrap_or_default()
        )?;
    }
    w.flush()?;
    let mut failed = Vec::new();
    if cfg.problem != Problem::Zero {
        for pair in rows.windows(2) {
            if pair[1].error >= pair[0].error {
                failed.push(format!("error does not decrease from n={} to n={}", pair[0].n, pair[1].n));
            }
        }
    }
    for r in &rows {
        if r.moment > cfg.moment_limit {
            failed.push(format!("weak-divergence moment {:.3e} at n={}", r.moment, r.n));
        }
    }
    if !failed.is_empty() {
        return Err(CliError::Checks { failed });
    }
    Ok(json!({
        "problem": cfg.problem.as_str(),
        "refinements": cfg.refinements,
        "errors": rows.iter().map(|r| r.error).collect::<Vec<_>>(),
        "observed_orders": orders,
        "outputs": [path_str(&csv_path)],
    }))
}

struct Check {
    name: &'static str,
    mesh: String,
    status: String,
    residual: f64,
    limit: f64,
}

impl Check {
    fn pass(&self) -> bool {
        self.residual <= self.limit
    }
}

fn interp_checks(label: String, mesh: SimplicialMesh, rng: &mut ChaCha8Rng, checks: &mut Vec<Check>) -> Result<(), CliError> {
    let ops = Operators::new(Arc::new(mesh));
    let space = ops.velocity();
    let d = divergence_matrix(space);
    let mut bubble: f64 = 0.0;
    let mut antisym: f64 = 0.0;
    for &[i, j] in ops.mesh().edges() {
        let b = edge_bubble(space, i, j)?;
        for (k, m) in d.mul_vec(&b.coeffs).iter().enumerate() {
            let expect = (k == i) as u8 as f64 - (k == j) as u8 as f64;
            bubble = bubble.max((m - expect).abs());
        }
        let r = edge_bubble(space, j, i)?;
        antisym = b.coeffs.iter().zip(&r.coeffs).fold(antisym, |a, (x, y)| a.max((x + y).abs()));
    }
    let mk = |name, status: &str, residual, limit| Check { name, mesh: label.clone(), status: status.into(), residual, limit };
    checks.push(mk("edge_bubble_identity", "", bubble, 1e-12));
    checks.push(mk("edge_bubble_antisymmetry", "", antisym, 0.0));

    let mut moments: f64 = 0.0;
    let free = space.free_dofs().len();
    if free > 0 {
        for _ in 0..200 {
            let w = random_interior_field(space, rng);
            let c = divergence_correct_field(space, &w)?;
            let (a, b) = (d.mul_vec(&c.coeffs), d.mul_vec(&w.coeffs));
            moments = a.iter().zip(&b).fold(moments, |m, (x, y)| m.max((x - y).abs()));
        }
    }
    checks.push(mk("divergence_correction_moments", "", moments, 1e-11));

    let r = pi_n(space, &CurlField::compact_box(0.25, 0.75))?;
    let pm = ops.field_weak_div_moments(&r.field).map_err(|e| CliError::Numerical(e.to_string()))?;
    let worst = pm.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let boundary = space.boundary_dofs().iter().fold(0.0f64, |a, &i| a.max(r.field.coeffs[i].abs()));
    checks.push(mk("composite_interpolant_moments", r.status.as_str(), worst, 1e-11));
    checks.push(mk("composite_interpolant_boundary", r.status.as_str(), boundary, 0.0));
    Ok(())
}

pub fn cmd_interp_verify(cfg: &RunConfig) -> Result<Value, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed());
    let mut checks = Vec::new();
    for &n in &cfg.refinements {
        interp_checks(format!("structured_{n}"), SimplicialMesh::structured_unit_square(n)?, &mut rng, &mut checks)?;
    }
    for t in 1..=3 {
        let m = build_pathological_mesh(PathologicalKind::AllBoundaryCell { triangles: t })?.mesh;
        interp_checks(format!("all_boundary_cell_{t}"), m, &mut rng, &mut checks)?;
    }
    let strip = build_pathological_mesh(PathologicalKind::BoundaryStrip { n: 4, omega: 1.0 })?.mesh;
    interp_checks("boundary_strip_4".into(), strip, &mut rng, &mut checks)?;

    let (report_path, mut w) = create(&cfg.out, "interp_report.csv")?;
    writeln!(w, "{REPORT_HEADER}")?;
    for c in &checks {
        writeln!(w, "{},{},{},{:.6e},{:.1e},{}", c.name, c.mesh, c.status, c.residual, c.limit, c.pass())?;
    }
    w.flush()?;

    let rows = pi_n_convergence_study(&CurlField::compact_box(0.25, 0.75), &cfg.refinements)?;
    let (study_path, mut w) = create(&cfg.out, "study.csv")?;
    write_study_csv(&rows, &mut w)?;
    w.flush()?;

    let mut per_check = serde_json::Map::new();
    for c in &checks {
        let e = per_check.entry(c.name).or_insert(json!(0.0));
        *e = json!(e.as_f64().unwrap_or(0.0).max(c.residual));
    }
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.pass())
        .map(|c| format!("{} on {}: {:.3e} > {:.1e}", c.name, c.mesh, c.residual, c.limit))
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Checks { failed });
    }
    Ok(json!({
        "checks": checks.len(),
        "max_residual": per_check,
        "outputs": [path_str(&report_path), path_str(&study_path)],
    }))
}
