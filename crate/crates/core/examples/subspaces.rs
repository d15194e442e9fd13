//! Symplectic complements and the isotropic / coisotropic / Lagrangian
//! classification of linear subspaces.

use hjkit::symplectic::Subspace;
use nalgebra::{DMatrix, DVector};

fn describe(name: &str, basis: DMatrix<f64>) -> hjkit::Result<()> {
    let n = basis.nrows();
    let v = Subspace::new(DVector::zeros(n), &basis, 1e-9)?;
    let perp = v.symp_orth()?;
    let c = v.classify()?;
    println!(
        "{name:<14} dim {} perp dim {} isotropic {} coisotropic {} lagrangian {} symplectic {}",
        v.dim(),
        perp.dim(),
        c.isotropic,
        c.coisotropic,
        c.lagrangian,
        c.symplectic
    );
    Ok(())
}

fn main() -> hjkit::Result<()> {
    // Coordinates of R^4 are (q1, q2, p1, p2).
    let e = |i: usize| DMatrix::from_fn(4, 1, |r, _| if r == i { 1.0 } else { 0.0 });
    describe("span{dq1}", e(0))?;
    describe("span{dq1,dq2}", DMatrix::from_columns(&[e(0).column(0), e(1).column(0)]))?;
    describe("span{dq1,dp1}", DMatrix::from_columns(&[e(0).column(0), e(2).column(0)]))?;
    describe("Ker dq1", DMatrix::from_columns(&[e(1).column(0), e(2).column(0), e(3).column(0)]))?;
    Ok(())
}
