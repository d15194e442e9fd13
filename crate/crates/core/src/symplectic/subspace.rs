use nalgebra::{DMatrix, DVector};

use super::structure::apply_j_cols;
use crate::error::{Error, Result};
use crate::linalg;

/// A linear subspace of the tangent space at `basepoint`, stored with an
/// orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basepoint: DVector<f64>,
    basis: DMatrix<f64>,
    rank_tol: f64,
}

/// Symplectic type of a subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Classification {
    pub isotropic: bool,
    pub coisotropic: bool,
    pub lagrangian: bool,
    pub symplectic: bool,
}

impl Subspace {
    /// Requires the columns of `basis` to be linearly independent.
    pub fn new(basepoint: DVector<f64>, basis: &DMatrix<f64>, rank_tol: f64) -> Result<Self> {
        let sp = Subspace::span(basepoint, basis, rank_tol);
        if sp.dim() != basis.ncols() {
            return Err(Error::RankDegenerate(format!(
                "basis of {} vectors has numerical rank {}",
                basis.ncols(),
                sp.dim()
            )));
        }
        Ok(sp)
    }

    /// Span of arbitrary (possibly dependent) columns.
    pub fn span(basepoint: DVector<f64>, vectors: &DMatrix<f64>, rank_tol: f64) -> Self {
        assert_eq!(basepoint.len(), vectors.nrows(), "basepoint and vectors disagree on dimension");
        let basis = linalg::column_space(vectors, rank_tol);
        Subspace { basepoint, basis, rank_tol }
    }

    pub fn whole(basepoint: DVector<f64>, rank_tol: f64) -> Self {
        let n = basepoint.len();
        Subspace { basepoint, basis: DMatrix::identity(n, n), rank_tol }
    }

    pub fn zero(basepoint: DVector<f64>, rank_tol: f64) -> Self {
        let n = basepoint.len();
        Subspace { basepoint, basis: DMatrix::zeros(n, 0), rank_tol }
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn basepoint(&self) -> &DVector<f64> {
        &self.basepoint
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// `other ⊆ self`, tested as `rank([other | self]) = rank(self)`.
    pub fn contains(&self, other: &Subspace) -> bool {
        if other.dim() == 0 {
            return true;
        }
        let stacked = linalg::hstack(&[&other.basis, &self.basis]);
        linalg::rank(&stacked, self.rank_tol) == self.dim()
    }

    pub fn contains_vector(&self, v: &DVector<f64>) -> bool {
        let m = DMatrix::from_column_slice(v.len(), 1, v.as_slice());
        if v.norm() == 0.0 {
            return true;
        }
        linalg::rank(&linalg::hstack(&[&m, &self.basis]), self.rank_tol) == self.dim()
    }

    /// Largest principal angle to `other`, `None` if dimensions differ.
    pub fn distance(&self, other: &Subspace) -> Option<f64> {
        linalg::subspace_distance(&self.basis, &other.basis)
    }

    /// Symplectic orthogonal `{w : omega(w, v) = 0 for all v in self}`,
    /// computed as the kernel of `(J B)^T`.
    pub fn symp_orth(&self) -> Result<Subspace> {
        let n = self.ambient_dim();
        if self.dim() == 0 {
            return Ok(Subspace::whole(self.basepoint.clone(), self.rank_tol));
        }
        let jb = apply_j_cols(&self.basis);
        let kernel = linalg::null_space(&jb.transpose(), self.rank_tol);
        if kernel.ncols() + self.dim() != n {
            return Err(Error::RankDegenerate(format!(
                "symplectic complement has dimension {} for a {}-dimensional subspace of R^{n}",
                kernel.ncols(),
                self.dim()
            )));
        }
        Ok(Subspace { basepoint: self.basepoint.clone(), basis: kernel, rank_tol: self.rank_tol })
    }

    pub fn classify(&self) -> Result<Classification> {
        let perp = self.symp_orth()?;
        let isotropic = perp.contains(self);
        let coisotropic = self.contains(&perp);
        let joint = linalg::hstack(&[&self.basis, &perp.basis]);
        let symplectic = linalg::rank(&joint, self.rank_tol) == self.ambient_dim();
        Ok(Classification { isotropic, coisotropic, lagrangian: isotropic && coisotropic, symplectic })
    }
}
