//! Quasi-Newton maximization on an unconstrained scale.
//!
//! BFGS with an Armijo backtracking line search, driven entirely by
//! objective evaluations (gradients by central differences). The objective
//! may return -inf to mark infeasible points; the line search treats those
//! as rejections and backtracks, so the iterate path stays feasible.

use nalgebra::{DMatrix, DVector};

/// Outcome of one maximization run.
#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    /// Objective value at `x`.
    pub value: f64,
    pub grad_inf_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub message: String,
}

const FD_STEP: f64 = 1e-6;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

fn fd_gradient(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64]) -> Option<DVector<f64>> {
    let mut grad = DVector::zeros(x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let h = FD_STEP * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        if !fp.is_finite() || !fm.is_finite() {
            return None;
        }
        grad[i] = (fp - fm) / (2.0 * h);
    }
    Some(grad)
}

/// Maximize `f` from `x0`; stops when the gradient infinity norm falls
/// below `grad_tol` or after `max_iter` iterations. The returned
/// `converged` flag is true when the final gradient is below
/// max(grad_tol, 1e-3), the stationarity bar reported fits must clear.
pub fn maximize(
    mut f: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    max_iter: usize,
    grad_tol: f64,
) -> OptimResult {
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let mut fx = f(x.as_slice());
    if !fx.is_finite() {
        return OptimResult {
            x: x0.to_vec(),
            value: fx,
            grad_inf_norm: f64::INFINITY,
            iterations: 0,
            converged: false,
            message: "objective not finite at the start point".into(),
        };
    }
    let mut grad = match fd_gradient(&mut f, x.as_slice()) {
        Some(g) => g,
        None => {
            return OptimResult {
                x: x0.to_vec(),
                value: fx,
                grad_inf_norm: f64::INFINITY,
                iterations: 0,
                converged: false,
                message: "gradient undefined at the start point".into(),
            }
        }
    };
    let mut hinv = DMatrix::<f64>::identity(n, n);
    let mut message = "gradient tolerance reached".to_string();
    let mut iterations = 0;
    let mut resets = 0;

    for iter in 1..=max_iter {
        iterations = iter;
        if grad.amax() < grad_tol {
            message = "gradient tolerance reached".into();
            break;
        }
        // ascent direction from the inverse-Hessian approximation of -f
        let mut dir = &hinv * &grad;
        if dir.dot(&grad) <= 0.0 {
            hinv = DMatrix::identity(n, n);
            dir = grad.clone();
        }
        let slope = grad.dot(&dir);
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand = &x + &dir * step;
            let fc = f(cand.as_slice());
            if fc.is_finite() && fc >= fx + ARMIJO_C1 * step * slope {
                accepted = Some((cand, fc));
                break;
            }
            step *= 0.5;
        }
        let (x_new, f_new) = match accepted {
            Some(pair) => pair,
            None => {
                if resets >= 2 {
                    message = "line search failed".into();
                    break;
                }
                resets += 1;
                hinv = DMatrix::identity(n, n);
                continue;
            }
        };
        let grad_new = match fd_gradient(&mut f, x_new.as_slice()) {
            Some(g) => g,
            None => {
                x = x_new;
                fx = f_new;
                message = "gradient undefined near the iterate".into();
                grad.fill(f64::INFINITY);
                break;
            }
        };
        let s = &x_new - &x;
        let y = &grad_new - &grad;
        let sy = -s.dot(&y); // curvature of the negated objective
        if sy > 1e-10 * s.norm() * y.norm() {
            // BFGS inverse-Hessian update (for minimizing -f):
            // H <- H + (rho^2 y'Hy + rho) s s' + rho (s (Hy)' + Hy s')
            let rho = 1.0 / sy;
            let hy = &hinv * &y;
            let yhy = y.dot(&hy);
            let s_hy = &s * hy.transpose();
            hinv = &hinv
                + (&s * s.transpose()) * (rho * rho * yhy + rho)
                + (&s_hy + s_hy.transpose()) * rho;
        }
        let small_step = s.norm() < 1e-13 * (1.0 + x.norm());
        x = x_new;
        fx = f_new;
        grad = grad_new;
        if small_step {
            message = "step size underflow".into();
            break;
        }
    }
    let grad_inf_norm = grad.amax();
    OptimResult {
        converged: grad_inf_norm < grad_tol.max(1e-3),
        x: x.as_slice().to_vec(),
        value: fx,
        grad_inf_norm,
        iterations,
        message,
    }
}
