use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{MapField, ScalarField};
use crate::linalg;
use crate::symplectic::{hamiltonian_vf, Classification, Subspace, VectorField};

/// Outcome of checking the two hypotheses at a point:
/// (i) `X_H(m)` is not vertical for `Pi`, and
/// (ii) `Ker Pi_*` is coisotropic at `m`.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub s: usize,
    pub k: usize,
    pub l: usize,
    pub base_point: Vec<f64>,
    pub hamiltonian_field: Vec<f64>,
    /// `rank([Ker Pi_* | X_H(m)])`, which must equal `l + 1`.
    pub transversal_rank: usize,
    pub hypothesis_i: bool,
    pub kernel_classification: Classification,
    pub hypothesis_ii: bool,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.hypothesis_i && self.hypothesis_ii
    }

    /// The first broken hypothesis as an error, if any.
    pub fn as_error(&self) -> Option<Error> {
        if !self.hypothesis_i {
            return Some(Error::Hypothesis {
                which: "i".into(),
                detail: format!("X_H(m) = {:?} lies in Ker Pi_*", self.hamiltonian_field),
            });
        }
        if !self.hypothesis_ii {
            return Some(Error::Hypothesis {
                which: "ii".into(),
                detail: format!("Ker Pi_* (dimension {}) is not coisotropic", self.l),
            });
        }
        None
    }
}

/// Orthonormal basis of `Ker Pi_{*,x}`; fails when `Pi` is not a
/// submersion at `x`.
pub fn vertical_basis(pi: &MapField, x: &DVector<f64>, rank_tol: f64) -> Result<DMatrix<f64>> {
    let jac = pi.jacobian(x.as_slice())?;
    let k = pi.target_dim();
    if linalg::rank(&jac, rank_tol) != k {
        return Err(Error::Hypothesis {
            which: "submersion".into(),
            detail: format!("Pi has rank {} < {k} at {:?}", linalg::rank(&jac, rank_tol), x.as_slice()),
        });
    }
    Ok(linalg::null_space(&jac, rank_tol))
}

pub fn check_assumptions(h: &ScalarField, pi: &MapField, m: &DVector<f64>, rank_tol: f64) -> Result<AssumptionReport> {
    let s = h.s();
    if pi.s() != s {
        return Err(Error::DimensionMismatch { expected: s, got: pi.s() });
    }
    let k = pi.target_dim();
    if k == 0 || k > 2 * s {
        return Err(Error::Config(format!("fibration has {k} components for s = {s}")));
    }
    let kernel = vertical_basis(pi, m, rank_tol)?;
    let l = kernel.ncols();
    let xh = hamiltonian_vf(h).eval(m)?;
    let xh_col = DMatrix::from_column_slice(2 * s, 1, xh.as_slice());
    let transversal_rank = linalg::rank(&linalg::hstack(&[&kernel, &xh_col]), rank_tol);
    let hypothesis_i = xh.norm() > 0.0 && transversal_rank == l + 1;
    let classification = Subspace::new(m.clone(), &kernel, rank_tol)?.classify()?;
    Ok(AssumptionReport {
        s,
        k,
        l,
        base_point: m.iter().copied().collect(),
        hamiltonian_field: xh.iter().copied().collect(),
        transversal_rank,
        hypothesis_i,
        kernel_classification: classification,
        hypothesis_ii: classification.coisotropic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn oscillator_hypotheses() {
        let h = ScalarField::parse("(q1^2+p1^2)/2", 1).unwrap();
        let pi = MapField::from_exprs(&["q1"], 1).unwrap();
        let bad = check_assumptions(&h, &pi, &pt(&[1.0, 0.0]), 1e-9).unwrap();
        assert!(!bad.hypothesis_i && bad.hypothesis_ii);
        assert!(matches!(bad.as_error(), Some(Error::Hypothesis { which, .. }) if which == "i"));
        let good = check_assumptions(&h, &pi, &pt(&[0.0, 1.0]), 1e-9).unwrap();
        assert!(good.passed());
        assert!(good.kernel_classification.lagrangian);
    }

    #[test]
    fn configuration_projection_is_lagrangian() {
        let h = ScalarField::parse("(p1^2+p2^2)/2", 2).unwrap();
        let pi = MapField::from_exprs(&["q1", "q2"], 2).unwrap();
        for m in [[0.0, 0.0, 1.0, 0.0], [3.0, -1.0, 0.2, 0.5]] {
            let r = check_assumptions(&h, &pi, &pt(&m), 1e-9).unwrap();
            assert!(r.kernel_classification.lagrangian);
            assert_eq!((r.k, r.l), (2, 2));
        }
    }

    #[test]
    fn non_submersion_is_an_error() {
        let h = ScalarField::parse("p1^2/2", 1).unwrap();
        let pi = MapField::from_exprs(&["q1^2"], 1).unwrap();
        assert!(check_assumptions(&h, &pi, &pt(&[0.0, 1.0]), 1e-9).is_err());
    }

    #[test]
    fn symplectic_kernel_breaks_hypothesis_ii() {
        // Pi = (q1, p1) on s = 2: kernel span{dq2, dp2} is symplectic.
        let h = ScalarField::parse("(p1^2+p2^2)/2", 2).unwrap();
        let pi = MapField::from_exprs(&["q1", "p1"], 2).unwrap();
        let r = check_assumptions(&h, &pi, &pt(&[0.0, 0.0, 1.0, 0.0]), 1e-9).unwrap();
        assert!(r.hypothesis_i && !r.hypothesis_ii);
    }
}
