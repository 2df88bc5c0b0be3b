//! Closed-form data for manufactured-solution runs on the unit square.
//!
//! Velocity `sin t * curl(X(x) Y(y))` with `X(s) = s^2 (1 - s)^2`, pressure
//! `sin t * (x - 1/2)`, unit viscosity, and the forcing that makes the
//! pair an exact solution of the momentum equation.

use crate::interp::Profile;
use crate::mesh::Point;

fn profiles(p: Point) -> ([f64; 4], [f64; 4]) {
    (Profile::Quartic.eval(p[0]), Profile::Quartic.eval(p[1]))
}

/// Exact velocity.
pub fn velocity(p: Point, t: f64) -> [f64; 2] {
    let (x, y) = profiles(p);
    let s = t.sin();
    [s * x[0] * y[1], -s * x[1] * y[0]]
}

/// Exact velocity gradient, `g[c][d] = d u_c / d x_d`.
pub fn velocity_gradient(p: Point, t: f64) -> [[f64; 2]; 2] {
    let (x, y) = profiles(p);
    let s = t.sin();
    [[s * x[1] * y[1], s * x[0] * y[2]], [-s * x[2] * y[0], -s * x[1] * y[1]]]
}

/// Exact pressure, of zero mean over the unit square.
pub fn pressure(p: Point, t: f64) -> f64 {
    t.sin() * (p[0] - 0.5)
}

/// `du/dt + (u . grad) u - laplacian u + grad p`.
pub fn forcing(p: Point, t: f64) -> [f64; 2] {
    let (x, y) = profiles(p);
    let (s, c) = t.sin_cos();
    let u = [s * x[0] * y[1], -s * x[1] * y[0]];
    let g = [[s * x[1] * y[1], s * x[0] * y[2]], [-s * x[2] * y[0], -s * x[1] * y[1]]];
    let lap = [s * (x[2] * y[1] + x[0] * y[3]), -s * (x[3] * y[0] + x[1] * y[2])];
    let mut f = [0.0; 2];
    for comp in 0..2 {
        let dt = if comp == 0 { c * x[0] * y[1] } else { -c * x[1] * y[0] };
        let adv = u[0] * g[comp][0] + u[1] * g[comp][1];
        let grad_p = if comp == 0 { s } else { 0.0 };
        f[comp] = dt + adv - lap[comp] + grad_p;
    }
    f
}

/// `du/dt - laplacian u + grad p`: the forcing for which the same pair
/// solves the unsteady Stokes equations.
pub fn stokes_forcing(p: Point, t: f64) -> [f64; 2] {
    let f = forcing(p, t);
    let u = velocity(p, t);
    let g = velocity_gradient(p, t);
    [f[0] - (u[0] * g[0][0] + u[1] * g[0][1]), f[1] - (u[0] * g[1][0] + u[1] * g[1][1])]
}

/// Initial velocity (identically zero since `sin 0 = 0`).
pub fn initial_velocity(p: Point) -> [f64; 2] {
    velocity(p, 0.0)
}
