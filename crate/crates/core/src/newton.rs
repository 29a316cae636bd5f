//! Damped Newton with backtracking for smooth strongly convex objectives.

use crate::error::{Error, Result};
use crate::linalg::{ParameterVector, PsdMatrix};

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub w: ParameterVector,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
}

/// Minimizes `f` given `eval(w) = (f(w), ∇f(w), ∇²f(w))`.
///
/// Stops once `‖∇f‖ ≤ tol`. When the line search can no longer make
/// progress the iterate is accepted if `‖∇f‖ ≤ stall_tol`.
pub fn damped_newton<F>(
    w0: ParameterVector,
    tol: f64,
    stall_tol: f64,
    max_iter: usize,
    eval: F,
) -> Result<NewtonOutcome>
where
    F: Fn(&ParameterVector) -> (f64, ParameterVector, PsdMatrix),
{
    let mut w = w0;
    let (mut value, mut grad, mut hess) = eval(&w);
    for iter in 0..=max_iter {
        let grad_norm = grad.norm();
        if grad_norm <= tol {
            return Ok(NewtonOutcome {
                w,
                value,
                grad_norm,
                iterations: iter,
            });
        }
        if iter == max_iter {
            break;
        }
        let step = hess.cholesky()?.solve(&grad)?;
        let decrement = grad.dot(&step)?;
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial = w.clone();
            trial.axpy(-t, &step)?;
            let (v, g, h) = eval(&trial);
            let g_norm = g.norm();
            // near the optimum f is flat to rounding; let the gradient decide
            let slack = 8.0 * f64::EPSILON * value.abs().max(v.abs());
            if v.is_finite() && (v <= value - 1e-4 * t * decrement || g_norm <= tol || (v <= value + slack && g_norm < grad_norm)) {
                accepted = Some((trial, v, g, h));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((trial, v, g, h)) => {
                w = trial;
                value = v;
                grad = g;
                hess = h;
            }
            None if grad_norm <= stall_tol => {
                return Ok(NewtonOutcome {
                    w,
                    value,
                    grad_norm,
                    iterations: iter,
                });
            }
            None => {
                return Err(Error::NewtonNotConverged {
                    iterations: iter,
                    residual: grad_norm,
                })
            }
        }
    }
    Err(Error::NewtonNotConverged {
        iterations: max_iter,
        residual: grad.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_converges_in_one_step() {
        let a = PsdMatrix::diagonal(&[2.0, 8.0]);
        let b = ParameterVector::from_slice(&[2.0, -4.0]).unwrap();
        let eval = |w: &ParameterVector| {
            let aw = a.mul_vec(w).unwrap();
            let v = 0.5 * w.dot(&aw).unwrap() - b.dot(w).unwrap();
            (v, aw.sub(&b).unwrap(), a.clone())
        };
        let out = damped_newton(ParameterVector::zeros(2), 1e-12, 1e-10, 10, eval).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.w.as_slice(), &[1.0, -0.5]);
    }

    #[test]
    fn softplus_needs_damping() {
        // f(w) = log(1 + e^w) + 0.01 w²/2 − 0.9w from far away
        let eval = |w: &ParameterVector| {
            let x = w[0];
            let s = 1.0 / (1.0 + (-x).exp());
            let v = x.max(0.0) + (-x.abs()).exp().ln_1p() + 0.005 * x * x - 0.9 * x;
            (
                v,
                ParameterVector::from_slice(&[s + 0.01 * x - 0.9]).unwrap(),
                PsdMatrix::diagonal(&[s * (1.0 - s) + 0.01]),
            )
        };
        let out = damped_newton(ParameterVector::from_slice(&[30.0]).unwrap(), 1e-12, 1e-10, 100, eval).unwrap();
        assert!(out.grad_norm <= 1e-12);
    }

    #[test]
    fn iteration_cap_reports_residual() {
        let eval = |w: &ParameterVector| {
            let x = w[0];
            (x.powi(4) + x * x, ParameterVector::from_slice(&[4.0 * x.powi(3) + 2.0 * x]).unwrap(), PsdMatrix::diagonal(&[12.0 * x * x + 2.0]))
        };
        let err = damped_newton(ParameterVector::from_slice(&[100.0]).unwrap(), 1e-14, 0.0, 2, eval).unwrap_err();
        assert!(matches!(err, Error::NewtonNotConverged { iterations: 2, .. }));
    }
}
