//! Rank-revealing helpers on top of nalgebra's SVD.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Singular values of `m`, largest first. Empty matrices have none.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

/// Numerical rank under a relative tolerance.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        None => 0,
        Some(&0.0) => 0,
        Some(&max) => sv.iter().filter(|&&v| v > rel_tol * max).count(),
    }
}

/// Smallest singular value over `min(rows, cols)` values.
pub fn min_singular_value(m: &DMatrix<f64>) -> f64 {
    singular_values(m).last().copied().unwrap_or(0.0)
}

/// Pads `m` with zero rows until it is at least as tall as it is wide, so
/// that the SVD exposes a full set of right singular vectors.
fn padded(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    if r >= c {
        return m.clone();
    }
    let mut out = DMatrix::zeros(c, c);
    out.view_mut((0, 0), (r, c)).copy_from(m);
    out
}

/// Orthonormal basis (as columns) of the column space of `m`.
pub fn column_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let rows = m.nrows();
    if m.ncols() == 0 || rows == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let max = svd.singular_values.max();
    if max == 0.0 {
        return DMatrix::zeros(rows, 0);
    }
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > rel_tol * max).collect();
    DMatrix::from_fn(rows, keep.len(), |i, j| u[(i, keep[j])])
}

/// Orthonormal basis (as columns) of the null space of `m`.
///
/// A zero matrix (or one without rows) has the whole space as kernel.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let sq = padded(m);
    let svd = sq.svd(false, true);
    let vt = svd.v_t.expect("requested V^T");
    let max = svd.singular_values.max();
    let cols: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&i| max == 0.0 || svd.singular_values[i] <= rel_tol * max).collect();
    DMatrix::from_fn(n, cols.len(), |i, j| vt[(cols[j], i)])
}

/// Orthonormal complement of the column space of `m` inside `R^rows`,
/// taken from the trailing left singular vectors.
pub fn orthogonal_complement(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    null_space(&m.transpose(), rel_tol)
}

/// Horizontal concatenation.
pub fn hstack(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = parts.iter().map(|p| p.nrows()).max().unwrap_or(0);
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for p in parts {
        if p.ncols() > 0 {
            out.view_mut((0, at), (p.nrows(), p.ncols())).copy_from(*p);
        }
        at += p.ncols();
    }
    out
}

/// Matrix whose columns are the given vectors.
pub fn columns(vs: &[DVector<f64>], rows: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(rows, vs.len());
    for (j, v) in vs.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// Solves the square system `a x = b` by LU with a conditioning guard.
pub fn solve(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    a.clone()
        .lu()
        .solve(b)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::RankDegenerate("singular linear system".into()))
}

pub fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::RankDegenerate("singular matrix".into()))
}

/// Cosines of the principal angles between two subspaces given by
/// orthonormal bases, returned as angles in radians (ascending).
pub fn principal_angles(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    if a.ncols() == 0 || b.ncols() == 0 {
        return Vec::new();
    }
    let m = a.transpose() * b;
    let mut cos = singular_values(&m);
    cos.iter_mut().for_each(|c| *c = c.clamp(-1.0, 1.0));
    let mut angles: Vec<f64> = cos.iter().map(|c| c.acos()).collect();
    angles.sort_by(|x, y| x.partial_cmp(y).unwrap());
    angles
}

/// Largest principal angle between two equal-dimensional subspaces, or
/// `None` when the dimensions differ. Uses the sine formulation, which stays
/// accurate for tiny angles where `acos` loses half the digits.
pub fn subspace_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<f64> {
    if a.ncols() != b.ncols() || a.nrows() != b.nrows() {
        return None;
    }
    if a.ncols() == 0 {
        return Some(0.0);
    }
    // Residual of projecting b onto span(a): its largest singular value is
    // the sine of the largest principal angle.
    let resid = b - a * (a.transpose() * b);
    let s = singular_values(&resid).first().copied().unwrap_or(0.0);
    Some(s.clamp(0.0, 1.0).asin())
}

/// Column-pivoted Gram-Schmidt on the columns of `m`: returns the indices
/// of up to `count` pivot columns chosen greedily by residual norm.
pub fn pivot_columns(m: &DMatrix<f64>, count: usize, abs_tol: f64) -> Vec<usize> {
    let mut work = m.clone();
    let mut chosen = Vec::new();
    for _ in 0..count.min(m.ncols()) {
        let (best, norm) = (0..work.ncols())
            .filter(|j| !chosen.contains(j))
            .map(|j| (j, work.column(j).norm()))
            .fold((usize::MAX, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        if best == usize::MAX || norm <= abs_tol {
            break;
        }
        chosen.push(best);
        let q = work.column(best) / norm;
        for j in 0..work.ncols() {
            let proj = q.dot(&work.column(j));
            let mut col = work.column_mut(j);
            col.axpy(-proj, &q, 1.0);
        }
    }
    chosen
}
