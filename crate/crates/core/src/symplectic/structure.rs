use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// The canonical form `omega(u, v) = u^T J v` on `R^{2s}` with coordinates
/// `(q1..qs, p1..ps)` and `J = [[0, I], [-I, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticStructure {
    s: usize,
}

impl SymplecticStructure {
    pub fn new(s: usize) -> Self {
        assert!(s > 0, "s must be positive");
        SymplecticStructure { s }
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn dim(&self) -> usize {
        2 * self.s
    }

    pub fn j_matrix(&self) -> DMatrix<f64> {
        j_matrix(self.s)
    }

    pub fn omega(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        for w in [u, v] {
            if w.len() != self.dim() {
                return Err(Error::DimensionMismatch { expected: self.dim(), got: w.len() });
            }
        }
        Ok(omega(u, v))
    }

    /// Matrix of pairings `omega(b_i, b_j)` between the columns of `basis`.
    pub fn gram(&self, basis: &DMatrix<f64>) -> DMatrix<f64> {
        let jb = apply_j_cols(basis);
        basis.transpose() * jb
    }
}

pub fn j_matrix(s: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * s, 2 * s);
    for i in 0..s {
        j[(i, s + i)] = 1.0;
        j[(s + i, i)] = -1.0;
    }
    j
}

/// `J v`: maps `(a, b)` to `(b, -a)`.
pub fn apply_j(v: &DVector<f64>) -> DVector<f64> {
    let s = v.len() / 2;
    DVector::from_fn(v.len(), |i, _| if i < s { v[s + i] } else { -v[i - s] })
}

pub fn apply_j_cols(m: &DMatrix<f64>) -> DMatrix<f64> {
    let s = m.nrows() / 2;
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| if i < s { m[(s + i, j)] } else { -m[(i - s, j)] })
}

/// `u^T J v` without dimension checks (callers guarantee `2s`).
pub fn omega(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let s = u.len() / 2;
    (0..s).map(|i| u[i] * v[s + i] - u[s + i] * v[i]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_pairings() {
        let st = SymplecticStructure::new(2);
        let e = |i: usize| DVector::from_fn(4, |k, _| if k == i { 1.0 } else { 0.0 });
        assert_eq!(st.omega(&e(0), &e(2)).unwrap(), 1.0);
        assert_eq!(st.omega(&e(0), &e(1)).unwrap(), 0.0);
        assert!(st.omega(&e(0), &DVector::zeros(3)).is_err());
    }

    #[test]
    fn j_properties() {
        for s in 1..5 {
            let j = j_matrix(s);
            assert_eq!(&j + j.transpose(), DMatrix::zeros(2 * s, 2 * s));
            assert_eq!(&j * &j, -DMatrix::identity(2 * s, 2 * s));
            assert!((j.determinant() - 1.0).abs() < 1e-12);
            let v = DVector::from_fn(2 * s, |i, _| i as f64 + 0.5);
            assert_eq!(apply_j(&v), &j * &v);
        }
    }
}
