//! Damped Newton iteration for square nonlinear systems.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonSettings {
    /// Absolute tolerance on the residual norm.
    pub tol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant of the Armijo test.
    pub armijo: f64,
    /// Smallest damping factor tried before giving up.
    pub min_step: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings { tol: 1e-10, max_iter: 50, armijo: 1e-4, min_step: 1.0 / 1024.0 }
    }
}

impl NewtonSettings {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Jacobian at the returned point.
    pub jacobian: DMatrix<f64>,
}

/// Solves `f(x) = 0` where `f` returns the residual and its Jacobian.
///
/// Full steps are damped by halving until the residual norm satisfies the
/// Armijo condition. Once the tolerance is met one extra polishing step is
/// taken if it lowers the residual further, which keeps the solution map
/// smooth enough to be differenced by callers.
pub fn solve<F>(f: F, x0: &DVector<f64>, settings: &NewtonSettings) -> Result<NewtonOutcome>
where
    F: Fn(&DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)>,
{
    let mut x = x0.clone();
    let (mut r, mut jac) = f(&x)?;
    let mut norm = r.norm();
    for iter in 0..=settings.max_iter {
        let converged = norm <= settings.tol;
        let dx = match jac.clone().lu().solve(&r) {
            Some(dx) if dx.iter().all(|v| v.is_finite()) => dx,
            _ if converged => return Ok(NewtonOutcome { x, residual: norm, iterations: iter, jacobian: jac }),
            _ => return Err(Error::NewtonFailed { iterations: iter, residual: norm }),
        };
        if converged {
            let trial = &x - &dx;
            if let Ok((rt, jt)) = f(&trial) {
                let nt = rt.norm();
                if nt < norm {
                    return Ok(NewtonOutcome { x: trial, residual: nt, iterations: iter + 1, jacobian: jt });
                }
            }
            return Ok(NewtonOutcome { x, residual: norm, iterations: iter, jacobian: jac });
        }
        if iter == settings.max_iter {
            break;
        }
        let mut alpha = 1.0;
        loop {
            let trial = &x - &dx * alpha;
            if let Ok((rt, jt)) = f(&trial) {
                let nt = rt.norm();
                if nt.is_finite() && nt <= (1.0 - settings.armijo * alpha) * norm {
                    x = trial;
                    r = rt;
                    jac = jt;
                    norm = nt;
                    break;
                }
            }
            alpha *= 0.5;
            if alpha < settings.min_step {
                return Err(Error::NewtonFailed { iterations: iter, residual: norm });
            }
        }
    }
    Err(Error::NewtonFailed { iterations: settings.max_iter, residual: norm })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_circle_line_intersection() {
        // x^2 + y^2 = 2, x = y
        let f = |v: &DVector<f64>| {
            let r = DVector::from_column_slice(&[v[0] * v[0] + v[1] * v[1] - 2.0, v[0] - v[1]]);
            let j = DMatrix::from_row_slice(2, 2, &[2.0 * v[0], 2.0 * v[1], 1.0, -1.0]);
            Ok((r, j))
        };
        let out = solve(f, &DVector::from_column_slice(&[2.0, 0.5]), &NewtonSettings::default()).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-12 && (out.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reports_failure_without_root() {
        let f = |v: &DVector<f64>| {
            Ok((DVector::from_column_slice(&[v[0] * v[0] + 1.0]), DMatrix::from_row_slice(1, 1, &[2.0 * v[0]])))
        };
        let r = solve(f, &DVector::from_column_slice(&[1.0]), &NewtonSettings::default());
        assert!(matches!(r, Err(Error::NewtonFailed { .. })));
    }
}
