//! Unpreconditioned (optionally Jacobi) Krylov solvers with deterministic
//! reductions.

use super::csr::{dot, norm2, CsrMatrix};
use super::SparseError;

/// Outcome of an iterative solve. `residual` is the true relative
/// residual `|A x - b| / max(|b|, eps)` recomputed from the returned iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
    pub breakdown: bool,
}

impl SolverReport {
    fn trivial() -> Self {
        SolverReport { iterations: 0, residual: 0.0, converged: true, breakdown: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub jacobi: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-12, max_iter: 20_000, jacobi: false }
    }
}

const EPS_NORM: f64 = 1e-300;

pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
    norm2(&r) / norm2(b).max(EPS_NORM)
}

fn check_square(a: &CsrMatrix, b: &[f64]) -> Result<(), SparseError> {
    if a.nrows() != a.ncols() {
        return Err(SparseError::NotSquare { nrows: a.nrows(), ncols: a.ncols() });
    }
    if b.len() != a.nrows() {
        return Err(SparseError::DimensionMismatch { expected: a.nrows(), found: b.len() });
    }
    Ok(())
}

fn inverse_diagonal(a: &CsrMatrix, enabled: bool) -> Option<Vec<f64>> {
    enabled.then(|| a.diagonal().into_iter().map(|d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect())
}

fn remove_mean(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Conjugate gradients for symmetric positive (semi-)definite systems.
///
/// With `deflate_constants` the matrix is assumed to have the constant
/// vector as its kernel: the right-hand side must be orthogonal to it
/// (relative to `tol`), iterates are kept orthogonal to it, and the
/// solution is finally shifted to zero weighted mean using
/// `mean_weights` (uniform weights when `None`).
pub fn cg_solve(
    a: &CsrMatrix,
    b: &[f64],
    opts: SolverOptions,
    deflate_constants: bool,
    mean_weights: Option<&[f64]>,
) -> Result<(Vec<f64>, SolverReport), SparseError> {
    check_square(a, b)?;
    let n = b.len();
    let bnorm = norm2(b);
    let mut rhs = b.to_vec();
    if deflate_constants && n > 0 {
        let along = b.iter().sum::<f64>().abs() / (n as f64).sqrt();
        if bnorm > 0.0 && along > opts.tol * bnorm {
            return Err(SparseError::Inconsistent { component: along / bnorm });
        }
        remove_mean(&mut rhs);
    }
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolverReport::trivial()));
    }
    let scale = norm2(&rhs).max(EPS_NORM);
    let dinv = inverse_diagonal(a, opts.jacobi);
    let precondition = |r: &[f64]| -> Vec<f64> {
        let mut z = match &dinv {
            Some(d) => r.iter().zip(d).map(|(r, d)| r * d).collect(),
            None => r.to_vec(),
        };
        if deflate_constants {
            remove_mean(&mut z);
        }
        z
    };

    let mut x = vec![0.0; n];
    let mut r = rhs.clone();
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        if norm2(&r) / scale <= opts.tol {
            // confirm on the true residual before accepting
            let ax = a.mul_vec(&x);
            r = rhs.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
            if deflate_constants {
                remove_mean(&mut r);
            }
            if norm2(&r) / scale <= opts.tol {
                converged = true;
                break;
            }
            z = precondition(&r);
            p = z.clone();
            rz = dot(&r, &z);
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if deflate_constants {
            remove_mean(&mut r);
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        iterations += 1;
    }
    if deflate_constants {
        let shift = match mean_weights {
            Some(w) => dot(w, &x) / w.iter().sum::<f64>(),
            None => x.iter().sum::<f64>() / n as f64,
        };
        x.iter_mut().for_each(|v| *v -= shift);
    }
    let residual = relative_residual(a, &x, &rhs);
    let converged = converged || residual <= opts.tol;
    Ok((x, SolverReport { iterations, residual, converged, breakdown: false }))
}

/// BiCGStab for general square systems. A breakdown restarts the
/// iteration once from the current iterate; a second breakdown ends the
/// solve with `breakdown = true` in the report.
pub fn bicgstab_solve(a: &CsrMatrix, b: &[f64], opts: SolverOptions) -> Result<(Vec<f64>, SolverReport), SparseError> {
    check_square(a, b)?;
    let n = b.len();
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolverReport::trivial()));
    }
    let dinv = inverse_diagonal(a, opts.jacobi);
    let precondition = |v: &[f64]| -> Vec<f64> {
        match &dinv {
            Some(d) => v.iter().zip(d).map(|(v, d)| v * d).collect(),
            None => v.to_vec(),
        }
    };
    let tiny = 1e-300;

    let mut x = vec![0.0; n];
    let mut iterations = 0;
    let mut restarts = 0;
    let mut breakdown = false;
    let mut converged = false;
    'outer: loop {
        let ax = a.mul_vec(&x);
        let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, ax)| b - ax).collect();
        if norm2(&r) / bnorm <= opts.tol {
            converged = true;
            break;
        }
        let r_hat = r.clone();
        let mut rho = 1.0;
        let mut alpha = 1.0;
        let mut omega: f64 = 1.0;
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut t = vec![0.0; n];
        while iterations < opts.max_iter {
            let rho_new = dot(&r_hat, &r);
            if rho_new.abs() < tiny || omega.abs() < tiny {
                if restarts == 0 {
                    restarts += 1;
                    continue 'outer;
                }
                breakdown = true;
                break 'outer;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for i in 0..n {
                p[i] = r[i] + beta * (p[i] - omega * v[i]);
            }
            let p_hat = precondition(&p);
            a.mul_vec_into(&p_hat, &mut v);
            let rv = dot(&r_hat, &v);
            if rv.abs() < tiny {
                if restarts == 0 {
                    restarts += 1;
                    continue 'outer;
                }
                breakdown = true;
                break 'outer;
            }
            alpha = rho / rv;
            for i in 0..n {
                s[i] = r[i] - alpha * v[i];
            }
            iterations += 1;
            if norm2(&s) / bnorm <= opts.tol {
                for i in 0..n {
                    x[i] += alpha * p_hat[i];
                }
                if relative_residual(a, &x, b) <= opts.tol {
                    converged = true;
                    break 'outer;
                }
                continue 'outer;
            }
            let s_hat = precondition(&s);
            a.mul_vec_into(&s_hat, &mut t);
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            for i in 0..n {
                x[i] += alpha * p_hat[i] + omega * s_hat[i];
                r[i] = s[i] - omega * t[i];
            }
            if norm2(&r) / bnorm <= opts.tol {
                if relative_residual(a, &x, b) <= opts.tol {
                    converged = true;
                    break 'outer;
                }
                // recursive residual drifted; restart from the true one
                continue 'outer;
            }
        }
        break;
    }
    let residual = relative_residual(a, &x, b);
    Ok((x, SolverReport { iterations, residual, converged: converged && residual <= opts.tol, breakdown }))
}
