//! Incremental pressure-correction time stepping.
//!
//! Each step solves a convection-diffusion problem for the predicted
//! velocity with the previous pressure gradient, then a pressure-increment
//! Poisson problem whose gradient projects the prediction onto the
//! discretely divergence-free fields. The corrected velocity is kept as a
//! [`CompositeVelocity`] and never collapsed to a nodal field.

mod diagnostics;

pub use diagnostics::{
    gap_l2l2, time_translate_diagnostic, velocity_error_l2l2, write_diagnostics_csv, DIAGNOSTICS_HEADER,
};

use std::sync::Arc;

use thiserror::Error;

use crate::fem::assembly::{convection, load};
use crate::fem::{CompositeVelocity, FemError, FieldP1Scalar, FieldP2Vector, Operators};
use crate::mesh::Point;
use crate::sparse::{bicgstab_solve, cg_solve, dot, CsrMatrix, SolverOptions, SolverReport, SparseError};

/// Space-time forcing callback.
pub type Forcing<'a> = &'a dyn Fn(Point, f64) -> [f64; 2];

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{stage} solve did not converge at step {step} (residual {residual:e} after {iterations} iterations)")]
    NotConverged { stage: &'static str, step: usize, residual: f64, iterations: usize },
    #[error("{stage} solve failed at step {step}: {source}")]
    Solver {
        stage: &'static str,
        step: usize,
        #[source]
        source: SparseError,
    },
    #[error(transparent)]
    Fem(#[from] FemError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    /// Number of time steps.
    pub steps: usize,
    pub final_time: f64,
    pub prediction: SolverOptions,
    pub correction: SolverOptions,
    /// Include the skew-symmetric convection term; without it each step is
    /// a Stokes-like problem.
    pub convection: bool,
    /// Evaluate the per-step energy balance.
    pub audit: bool,
    /// Keep every state for post-processing.
    pub store_trajectory: bool,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            steps: 10,
            final_time: 1.0,
            prediction: SolverOptions::default(),
            correction: SolverOptions::default(),
            convection: true,
            audit: true,
            store_trajectory: false,
        }
    }
}

impl SchemeConfig {
    pub fn new(steps: usize, final_time: f64) -> Self {
        SchemeConfig { steps, final_time, ..Default::default() }
    }

    pub fn dt(&self) -> f64 {
        self.final_time / self.steps as f64
    }

    pub fn validate(&self) -> Result<(), SchemeError> {
        if self.steps == 0 {
            return Err(SchemeError::Config("steps must be at least 1".into()));
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(SchemeError::Config(format!("final time must be positive, got {}", self.final_time)));
        }
        for (name, o) in [("prediction", &self.prediction), ("correction", &self.correction)] {
            if !(o.tol > 0.0 && o.tol < 1.0) {
                return Err(SchemeError::Config(format!("{name} tolerance must lie in (0, 1), got {}", o.tol)));
            }
            if o.max_iter == 0 {
                return Err(SchemeError::Config(format!("{name} iteration limit must be positive")));
            }
        }
        Ok(())
    }
}

/// `(n, t^n, predicted velocity, corrected velocity, pressure)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeState {
    pub n: usize,
    pub t: f64,
    pub u_tilde: FieldP2Vector,
    pub u: CompositeVelocity,
    pub p: FieldP1Scalar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    /// Index of the new state.
    pub n: usize,
    pub t: f64,
    /// `|lhs - rhs| / max(1, |rhs|)` of the per-step energy balance.
    pub energy_residual: f64,
    pub energy_lhs: f64,
    pub energy_rhs: f64,
    /// Same measure for the balance of the prediction step alone.
    pub prediction_residual: f64,
    pub u_l2: f64,
    pub ut_l2: f64,
    pub ut_h1: f64,
    pub gradp_l2: f64,
    /// `|u_tilde^{n+1} - u^n|`.
    pub gap_l2: f64,
    /// `2 dt (u^{n+1}, grad dp)`, zero up to the correction tolerance.
    pub pythagoras_cross: f64,
    pub max_moment: f64,
    pub pressure_mean: f64,
    pub prediction: SolverReport,
    pub correction: SolverReport,
}

/// States kept when the trajectory is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    /// `states[n]` is the state at `t^n`, `n = 0..=N`.
    pub states: Vec<SchemeState>,
}

impl Trajectory {
    /// Predicted velocities `u_tilde^1..u_tilde^N`, the values of the
    /// piecewise-constant reconstruction on `(t^n, t^{n+1}]`.
    pub fn predicted(&self) -> Vec<&FieldP2Vector> {
        self.states.iter().skip(1).map(|s| &s.u_tilde).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub initial: SchemeState,
    pub final_state: SchemeState,
    pub diagnostics: Vec<StepDiagnostics>,
    pub initial_projection: SolverReport,
    pub trajectory: Option<Trajectory>,
}

/// The time stepper bound to one mesh and configuration.
#[derive(Debug, Clone)]
pub struct Scheme {
    ops: Arc<Operators>,
    config: SchemeConfig,
    /// `(1/dt) M + A` on the interior dofs.
    base: CsrMatrix,
}

impl Scheme {
    pub fn new(ops: Arc<Operators>, config: SchemeConfig) -> Result<Self, SchemeError> {
        config.validate()?;
        let free = ops.velocity().free_dofs();
        let dt = config.dt();
        let base = ops.mass.submatrix(free, free).add(1.0 / dt, &ops.stiffness.submatrix(free, free), 1.0);
        Ok(Scheme { ops, config, base })
    }

    pub fn operators(&self) -> &Arc<Operators> {
        &self.ops
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn dt(&self) -> f64 {
        self.config.dt()
    }

    /// Solves `L x = b` for a zero-mean `x`, first removing a component of
    /// `b` along the constants that is at rounding level.
    fn pressure_solve(&self, b: &mut [f64], abs_scale: f64, stage: &'static str, step: usize) -> Result<(Vec<f64>, SolverReport), SchemeError> {
        let n = b.len() as f64;
        let sum: f64 = b.iter().sum();
        if sum.abs() <= 64.0 * f64::EPSILON * abs_scale {
            b.iter_mut().for_each(|v| *v -= sum / n);
        }
        let (x, report) = cg_solve(&self.ops.laplacian, b, self.config.correction, true, Some(&self.ops.p1_rows))
            .map_err(|source| SchemeError::Solver { stage, step, source })?;
        if !report.converged {
            return Err(SchemeError::NotConverged { stage, step, residual: report.residual, iterations: report.iterations });
        }
        Ok((x, report))
    }

    /// `sum_i |G_ik w_i|` summed over k: the magnitude of the terms that
    /// cancel in `sum_k (G^T w)_k`.
    fn grad_abs_scale(&self, w: &[f64]) -> f64 {
        let g = &self.ops.grad;
        (0..g.nrows()).map(|r| g.row(r).map(|(_, v)| (v * w[r]).abs()).sum::<f64>()).sum()
    }

    /// Initial state from a closed-form velocity: nodal interpolation
    /// followed by the discrete Helmholtz projection.
    pub fn initialize(&self, u0: &dyn Fn(Point) -> [f64; 2]) -> Result<(SchemeState, SolverReport), SchemeError> {
        self.initialize_from_field(self.ops.velocity().interpolate(u0))
    }

    /// Projects `w` onto the weakly divergence-free fields:
    /// `u^0 = w - grad p0` with `(grad p0, grad q) = (w, grad q)`.
    pub fn initialize_from_field(&self, w: FieldP2Vector) -> Result<(SchemeState, SolverReport), SchemeError> {
        let mut rhs = self.ops.field_weak_div_moments(&w)?;
        let scale = self.grad_abs_scale(&w.coeffs);
        let (p0, report) = self.pressure_solve(&mut rhs, scale, "initial projection", 0)?;
        let pressure = self.ops.pressure();
        let u = CompositeVelocity { p2_part: w, grad_part: pressure.field(p0)?, scale: 1.0 };
        let state = SchemeState { n: 0, t: 0.0, u_tilde: self.ops.velocity().zeros(), u, p: pressure.zeros() };
        Ok((state, report))
    }

    /// Prediction: `((1/dt) M + C(u_tilde^n) + A) u_tilde = (1/dt)(u^n, .) + f - G p^n`
    /// on the interior dofs. Returns the prediction, its solver report
    /// and the full load vector.
    pub fn predict(&self, state: &SchemeState, f: Forcing) -> Result<(FieldP2Vector, SolverReport, Vec<f64>), SchemeError> {
        let dt = self.dt();
        let space = self.ops.velocity();
        let free = space.free_dofs();
        let t0 = state.t;
        let t1 = t0 + dt;
        let step = state.n + 1;
        let forcing = load(space, f, t0, t1);
        let moment = self.ops.composite_moment_vector(&state.u)?;
        let gp = self.ops.grad.mul_vec(&state.p.values);
        let rhs: Vec<f64> = free.iter().map(|&i| moment[i] / dt + forcing[i] - gp[i]).collect();
        let wind_active = self.config.convection && state.u_tilde.coeffs.iter().any(|&c| c != 0.0);
        let system = if wind_active {
            let c = convection(space, &state.u_tilde).submatrix(free, free);
            self.base.add(1.0, &c, 1.0)
        } else {
            self.base.clone()
        };
        let (x, report) = if wind_active {
            bicgstab_solve(&system, &rhs, self.config.prediction)
        } else {
            cg_solve(&system, &rhs, self.config.prediction, false, None)
        }
        .map_err(|source| SchemeError::Solver { stage: "prediction", step, source })?;
        if !report.converged {
            return Err(SchemeError::NotConverged {
                stage: "prediction",
                step,
                residual: report.residual,
                iterations: report.iterations,
            });
        }
        Ok((space.extend_free(&x), report, forcing))
    }

    /// Correction: `(grad dp, grad q) = (1/dt)(u_tilde, grad q)`,
    /// `p^{n+1} = p^n + dp` and `u^{n+1} = u_tilde - dt grad dp`.
    /// Returns `(dp, p^{n+1}, u^{n+1}, report)`.
    pub fn correct(
        &self,
        state: &SchemeState,
        u_tilde: &FieldP2Vector,
    ) -> Result<(FieldP1Scalar, FieldP1Scalar, CompositeVelocity, SolverReport), SchemeError> {
        let dt = self.dt();
        let mut rhs = self.ops.field_weak_div_moments(u_tilde)?;
        rhs.iter_mut().for_each(|v| *v /= dt);
        let scale = self.grad_abs_scale(&u_tilde.coeffs) / dt;
        let (dp, report) = self.pressure_solve(&mut rhs, scale, "correction", state.n + 1)?;
        let pressure = self.ops.pressure();
        let mut p: Vec<f64> = state.p.values.iter().zip(&dp).map(|(a, b)| a + b).collect();
        let mean = dot(&self.ops.p1_rows, &p) / self.ops.p1_rows.iter().sum::<f64>();
        p.iter_mut().for_each(|v| *v -= mean);
        let dp = pressure.field(dp)?;
        let u = CompositeVelocity { p2_part: u_tilde.clone(), grad_part: dp.clone(), scale: dt };
        Ok((dp, pressure.field(p)?, u, report))
    }

    pub fn step(&self, state: &SchemeState, f: Forcing) -> Result<(SchemeState, StepDiagnostics), SchemeError> {
        let dt = self.dt();
        let (u_tilde, pred_report, forcing) = self.predict(state, f)?;
        let (dp, p, u, corr_report) = self.correct(state, &u_tilde)?;
        let next = SchemeState { n: state.n + 1, t: (state.n + 1) as f64 * dt, u_tilde, u, p };
        let diag = self.diagnose(state, &next, &dp, &forcing, pred_report, corr_report)?;
        Ok((next, diag))
    }

    fn diagnose(
        &self,
        prev: &SchemeState,
        next: &SchemeState,
        dp: &FieldP1Scalar,
        forcing: &[f64],
        prediction: SolverReport,
        correction: SolverReport,
    ) -> Result<StepDiagnostics, SchemeError> {
        let ops = &self.ops;
        let dt = self.dt();
        let ut = &next.u_tilde;
        let u_new_sq = ops.composite_norm_sq(&next.u)?;
        let u_old_sq = ops.composite_norm_sq(&prev.u)?;
        let ut_sq = ops.mass.bilinear(&ut.coeffs, &ut.coeffs);
        let ut_h1_sq = ops.stiffness.bilinear(&ut.coeffs, &ut.coeffs);
        let gp_new_sq = ops.laplacian.bilinear(&next.p.values, &next.p.values);
        let gp_old_sq = ops.laplacian.bilinear(&prev.p.values, &prev.p.values);
        // u_tilde - u^n = (u_tilde - w_n) + s_n grad g_n
        let diff = CompositeVelocity {
            p2_part: ut.axpy(-1.0, &prev.u.p2_part),
            grad_part: prev.u.grad_part.clone(),
            scale: -prev.u.scale,
        };
        let gap_sq = ops.composite_norm_sq(&diff)?;
        let work = dot(forcing, &ut.coeffs);

        let (energy_lhs, energy_residual, prediction_residual) = if self.config.audit {
            let lhs = (u_new_sq - u_old_sq) / (2.0 * dt) + 0.5 * dt * (gp_new_sq - gp_old_sq) + gap_sq / (2.0 * dt) + ut_h1_sq;
            let pressure_work = ops.grad.bilinear(&ut.coeffs, &prev.p.values);
            let pred_lhs = (ut_sq - u_old_sq + gap_sq) / (2.0 * dt) + ut_h1_sq;
            let pred_rhs = work - pressure_work;
            (
                lhs,
                (lhs - work).abs() / work.abs().max(1.0),
                (pred_lhs - pred_rhs).abs() / pred_rhs.abs().max(1.0),
            )
        } else {
            (f64::NAN, f64::NAN, f64::NAN)
        };
        let moments = ops.weak_div_moments(&next.u)?;
        let max_moment = moments.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let pythagoras_cross = 2.0 * dt * dot(&dp.values, &moments);
        Ok(StepDiagnostics {
            n: next.n,
            t: next.t,
            energy_residual,
            energy_lhs,
            energy_rhs: work,
            prediction_residual,
            u_l2: u_new_sq.max(0.0).sqrt(),
            ut_l2: ut_sq.max(0.0).sqrt(),
            ut_h1: ut_h1_sq.max(0.0).sqrt(),
            gradp_l2: gp_new_sq.max(0.0).sqrt(),
            gap_l2: gap_sq.max(0.0).sqrt(),
            pythagoras_cross,
            max_moment,
            pressure_mean: ops.mean(&next.p)?,
            prediction,
            correction,
        })
    }

    pub fn run(&self, u0: &dyn Fn(Point) -> [f64; 2], f: Forcing) -> Result<RunOutput, SchemeError> {
        self.run_with(u0, f, |_, _| {})
    }

    /// Runs all steps, calling `observer` after each one.
    pub fn run_with(
        &self,
        u0: &dyn Fn(Point) -> [f64; 2],
        f: Forcing,
        mut observer: impl FnMut(&SchemeState, &StepDiagnostics),
    ) -> Result<RunOutput, SchemeError> {
        let (initial, initial_projection) = self.initialize(u0)?;
        let mut trajectory =
            self.config.store_trajectory.then(|| Trajectory { dt: self.dt(), states: vec![initial.clone()] });
        let mut state = initial.clone();
        let mut diagnostics = Vec::with_capacity(self.config.steps);
        for _ in 0..self.config.steps {
            let (next, diag) = self.step(&state, f)?;
            observer(&next, &diag);
            if let Some(t) = trajectory.as_mut() {
                t.states.push(next.clone());
            }
            diagnostics.push(diag);
            state = next;
        }
        Ok(RunOutput { initial, final_state: state, diagnostics, initial_projection, trajectory })
    }
}

#[cfg(test)]
mod tests;
