use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::MapField;
use crate::symplectic::VectorField;

/// A fibration `pi = (Q_1 .. Q_k)` read off a relabelled Darboux chart in
/// which `X(m)` has a nonzero first configuration component.
#[derive(Debug, Clone, Serialize)]
pub struct DarbouxFibration {
    /// Component expressions of `pi`.
    pub components: Vec<String>,
    /// Whether the canonical swap `(q, p) -> (-p, q)` was applied.
    pub swapped: bool,
    /// Original indices (1-based) of the new `q_1 .. q_s`.
    pub order: Vec<usize>,
    #[serde(skip)]
    pub map: MapField,
}

/// Builds `pi` so that `X(m)` is transverse to its fibres and `Ker pi_*`
/// is coisotropic.
pub fn build_fibration_prop2(x: &dyn VectorField, m: &DVector<f64>, k: usize, tol: f64) -> Result<DarbouxFibration> {
    let n = x.dim();
    let s = n / 2;
    if m.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.len() });
    }
    if k == 0 || k > s {
        return Err(Error::Config(format!("fibration rank k = {k} must lie in 1..={s}")));
    }
    let v = x.eval(m)?;
    let size = v.amax();
    if size <= tol {
        return Err(Error::Hypothesis { which: "X(m) != 0".into(), detail: format!("|X(m)| = {size:e}") });
    }
    let q_part = v.rows(0, s);
    let swapped = q_part.amax() <= tol * size.max(1.0);
    // After (q, p) -> (-p, q) the new configuration components of X are -p.
    let a: Vec<f64> =
        if swapped { v.rows(s, s).iter().map(|c| -c).collect() } else { q_part.iter().copied().collect() };
    let lead = (0..s).fold(0, |best, i| if a[i].abs() > a[best].abs() { i } else { best });
    let mut order = vec![lead];
    order.extend((0..s).filter(|&i| i != lead));
    let components: Vec<String> =
        order.iter().take(k).map(|&i| if swapped { format!("-p{}", i + 1) } else { format!("q{}", i + 1) }).collect();
    let map = MapField::from_exprs(&components, s)?;
    Ok(DarbouxFibration { components, swapped, order: order.iter().map(|i| i + 1).collect(), map })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::vertical_basis;
    use crate::linalg;
    use crate::symplectic::{ConstantField, Subspace};
    use nalgebra::DMatrix;

    fn check(v: &[f64], k: usize) -> DarbouxFibration {
        let x = ConstantField::new(DVector::from_column_slice(v));
        let m = DVector::zeros(v.len());
        let fib = build_fibration_prop2(&x, &m, k, 1e-12).unwrap();
        let ker = vertical_basis(&fib.map, &m, 1e-9).unwrap();
        assert!(Subspace::new(m.clone(), &ker, 1e-9).unwrap().classify().unwrap().coisotropic);
        let col = DMatrix::from_column_slice(v.len(), 1, v);
        assert_eq!(linalg::rank(&linalg::hstack(&[&ker, &col]), 1e-9), ker.ncols() + 1);
        fib
    }

    #[test]
    fn momentum_direction_swaps() {
        let fib = check(&[0.0, 0.0, 1.0, 0.0], 1);
        assert!(fib.swapped);
        assert_eq!(fib.components, vec!["-p1"]);
    }

    #[test]
    fn reorders_to_largest_component() {
        let fib = check(&[0.0, 1.0, 0.0, 0.0], 2);
        assert!(!fib.swapped);
        assert_eq!(fib.components, vec!["q2", "q1"]);
    }

    #[test]
    fn zero_field_rejected() {
        let x = ConstantField::new(DVector::zeros(4));
        let err = build_fibration_prop2(&x, &DVector::zeros(4), 1, 1e-12).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn k_above_s_rejected() {
        let x = ConstantField::new(DVector::from_column_slice(&[1.0, 0.0]));
        assert!(build_fibration_prop2(&x, &DVector::zeros(2), 2, 1e-12).is_err());
    }
}
