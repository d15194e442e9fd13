//! Explicit Runge-Kutta integration of autonomous ODEs, with optional
//! propagation of the variational (tangent) equation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symplectic::VectorField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rk4Fixed,
    Rkf45Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub method: Method,
    /// Fixed step for RK4; initial step for RKF45.
    pub step: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings {
            method: Method::Rkf45Adaptive,
            step: 1e-3,
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_steps: 200_000,
        }
    }
}

impl IntegratorSettings {
    pub fn rk4(step: f64) -> Self {
        IntegratorSettings { method: Method::Rk4Fixed, step, ..Default::default() }
    }

    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }
}

/// Endpoint of a flow, its derivative with respect to the initial point,
/// and the field value at the endpoint.
#[derive(Debug, Clone)]
pub struct FlowResult {
    pub point: DVector<f64>,
    pub tangent: DMatrix<f64>,
    pub velocity: DVector<f64>,
}

// Fehlberg 4(5) tableau; the system is autonomous so the nodes are unused.
const A: [[f64; 5]; 6] = [
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [0.25, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
    [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
    [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
    [-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
];
const B5: [f64; 6] = [16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0, -9.0 / 50.0, 2.0 / 55.0];
const B4: [f64; 6] = [25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0];

fn check_state(x: &DVector<f64>) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Integrator("non-finite state".into()))
    }
}

fn rk4_step<F>(rhs: &F, x: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let k1 = rhs(x)?;
    let k2 = rhs(&(x + &k1 * (0.5 * h)))?;
    let k3 = rhs(&(x + &k2 * (0.5 * h)))?;
    let k4 = rhs(&(x + &k3 * h))?;
    Ok(x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

fn rk4_fixed<F>(rhs: &F, x0: &DVector<f64>, t: f64, step: f64, max_steps: usize) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    if !(step > 0.0) {
        return Err(Error::Integrator("step must be positive".into()));
    }
    let n = (t.abs() / step).ceil().max(1.0) as usize;
    if n > max_steps {
        return Err(Error::Integrator(format!("fixed-step run needs {n} steps, limit {max_steps}")));
    }
    let h = t / n as f64;
    let mut x = x0.clone();
    for _ in 0..n {
        x = rk4_step(rhs, &x, h)?;
        check_state(&x)?;
    }
    Ok(x)
}

/// Adaptive RKF45 returning `None` when the step size underflows.
fn rkf45<F>(rhs: &F, x0: &DVector<f64>, t: f64, s: &IntegratorSettings) -> Result<Option<DVector<f64>>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let dir = t.signum();
    let mut x = x0.clone();
    let mut done = 0.0_f64;
    let mut h = s.step.min(t.abs()).max(f64::MIN_POSITIVE);
    let min_h = 1e-13 * t.abs().max(1.0);
    let mut steps = 0usize;
    let mut k: Vec<DVector<f64>> = Vec::with_capacity(6);
    while done < t.abs() {
        if steps >= s.max_steps {
            return Err(Error::Integrator(format!("step limit {} exceeded", s.max_steps)));
        }
        steps += 1;
        let last = h >= t.abs() - done;
        if last {
            h = t.abs() - done;
        }
        let hs = dir * h;
        k.clear();
        for stage in 0..6 {
            let mut xs = x.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    xs.axpy(a * hs, kj, 1.0);
                }
            }
            k.push(rhs(&xs)?);
        }
        let mut x5 = x.clone();
        let mut err = DVector::zeros(x.len());
        for (j, kj) in k.iter().enumerate() {
            x5.axpy(B5[j] * hs, kj, 1.0);
            err.axpy((B5[j] - B4[j]) * hs, kj, 1.0);
        }
        check_state(&x5)?;
        let norm = err
            .iter()
            .zip(x.iter().zip(x5.iter()))
            .map(|(e, (a, b))| e.abs() / (s.abs_tol + s.rel_tol * a.abs().max(b.abs())))
            .fold(0.0_f64, f64::max);
        if norm <= 1.0 {
            x = x5;
            done = if last { t.abs() } else { done + h };
        }
        let factor = if norm == 0.0 { 5.0 } else { (0.9 * norm.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < min_h && done < t.abs() {
            return Ok(None);
        }
    }
    Ok(Some(x))
}

/// Integrates `x' = rhs(x)` from `x0` over time `t` (which may be negative).
pub fn integrate<F>(rhs: F, x0: &DVector<f64>, t: f64, settings: &IntegratorSettings) -> Result<DVector<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    check_state(x0)?;
    if !t.is_finite() {
        return Err(Error::Integrator("non-finite integration time".into()));
    }
    if t == 0.0 {
        return Ok(x0.clone());
    }
    match settings.method {
        Method::Rk4Fixed => rk4_fixed(&rhs, x0, t, settings.step, settings.max_steps),
        Method::Rkf45Adaptive => match rkf45(&rhs, x0, t, settings)? {
            Some(x) => Ok(x),
            None => {
                log::warn!("adaptive step underflow; falling back to fixed RK4 with step 1e-3");
                rk4_fixed(&rhs, x0, t, 1e-3, settings.max_steps.max(1_000_000))
            }
        },
    }
}

/// Integrates the state together with its variational equation
/// `Phi' = DX(x) Phi`, `Phi(0) = I`.
pub fn integrate_with_tangent<F>(
    rhs: F,
    x0: &DVector<f64>,
    t: f64,
    settings: &IntegratorSettings,
) -> Result<(DVector<f64>, DMatrix<f64>)>
where
    F: Fn(&DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)>,
{
    let n = x0.len();
    let mut z0 = DVector::zeros(n + n * n);
    z0.rows_mut(0, n).copy_from(x0);
    for i in 0..n {
        z0[n + i * n + i] = 1.0;
    }
    let aug = |z: &DVector<f64>| -> Result<DVector<f64>> {
        let x = z.rows(0, n).into_owned();
        let phi = DMatrix::from_column_slice(n, n, &z.as_slice()[n..]);
        let (v, jac) = rhs(&x)?;
        let dphi = jac * phi;
        let mut out = DVector::zeros(n + n * n);
        out.rows_mut(0, n).copy_from(&v);
        out.as_mut_slice()[n..].copy_from_slice(dphi.as_slice());
        Ok(out)
    };
    let z = integrate(aug, &z0, t, settings)?;
    let x = z.rows(0, n).into_owned();
    let phi = DMatrix::from_column_slice(n, n, &z.as_slice()[n..]);
    Ok((x, phi))
}

/// `Phi^t_X(x0)`.
pub fn flow<V: VectorField + ?Sized>(
    field: &V,
    x0: &DVector<f64>,
    t: f64,
    settings: &IntegratorSettings,
) -> Result<DVector<f64>> {
    integrate(|x| field.eval(x), x0, t, settings)
}

/// `(Phi^t_X(x0), D Phi^t_X(x0))` plus the field value at the endpoint.
pub fn flow_with_tangent<V: VectorField + ?Sized>(
    field: &V,
    x0: &DVector<f64>,
    t: f64,
    settings: &IntegratorSettings,
) -> Result<FlowResult> {
    let (point, tangent) = integrate_with_tangent(|x| field.eval_with_jacobian(x), x0, t, settings)?;
    let velocity = field.eval(&point)?;
    Ok(FlowResult { point, tangent, velocity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rot(x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(DVector::from_column_slice(&[x[1], -x[0]]))
    }

    #[test]
    fn quarter_turn_of_oscillator() {
        let x0 = DVector::from_column_slice(&[1.0, 0.0]);
        let x = integrate(rot, &x0, PI / 2.0, &IntegratorSettings::default()).unwrap();
        assert!((x[0] - 0.0).abs() < 1e-8 && (x[1] + 1.0).abs() < 1e-8, "{x}");
        let back = integrate(rot, &x, -PI / 2.0, &IntegratorSettings::default()).unwrap();
        assert!((back - &x0).norm() < 1e-8);
    }

    #[test]
    fn fixed_step_agrees() {
        let x0 = DVector::from_column_slice(&[1.0, 0.0]);
        let x = integrate(rot, &x0, 2.0 * PI, &IntegratorSettings::rk4(1e-3)).unwrap();
        assert!((x - x0).norm() < 1e-10);
    }

    #[test]
    fn step_limit_is_enforced() {
        let s = IntegratorSettings { max_steps: 3, ..IntegratorSettings::rk4(1e-3) };
        let x0 = DVector::from_column_slice(&[1.0, 0.0]);
        assert!(matches!(integrate(rot, &x0, 1.0, &s), Err(Error::Integrator(_))));
        let s = IntegratorSettings { max_steps: 3, ..Default::default() };
        assert!(matches!(integrate(rot, &x0, 100.0, &s), Err(Error::Integrator(_))));
    }

    #[test]
    fn blow_up_is_reported() {
        let x0 = DVector::from_column_slice(&[1.0]);
        let r = integrate(|x| Ok(x.map(|v| v * v)), &x0, 2.0, &IntegratorSettings::rk4(0.01));
        assert!(r.is_err());
    }
}
