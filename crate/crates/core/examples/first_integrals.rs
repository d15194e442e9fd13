//! Extend the frame `X_H` to `k` commuting fields and read off first
//! integrals from the final chart.

use hjkit::construct::{build_first_integrals, ConstructSettings};
use hjkit::expr::{MapField, ScalarField};
use hjkit::symplectic::{hamiltonian_vf, VectorField};
use nalgebra::DVector;

fn main() -> hjkit::Result<()> {
    let h = ScalarField::parse("(p1^2 + p2^2)/2 + (q1^2 + 4*q2^2)/2", 2)?;
    let pi = MapField::from_exprs(&["q1", "q2"], 2)?;
    let m = DVector::from_column_slice(&[0.3, 0.1, 1.0, 0.7]);
    let fi = build_first_integrals(&h, &pi, &m, &ConstructSettings::default())?;
    for step in &fi.history {
        println!("extension r = {}: chose b = {} of candidates {:?}", step.r, step.b, step.candidates);
    }
    println!("diagnostics {:?}", fi.diagnostics);

    let x = DVector::from_column_slice(&[0.35, 0.05, 0.95, 0.75]);
    let (f, df) = fi.map.eval_with_jacobian(x.as_slice())?;
    println!("F(x)      = {:?}", f.as_slice());
    println!("dF(X_H)   = {:?}", (df * hamiltonian_vf(&h).eval(&x)?).as_slice());
    Ok(())
}
