//! Hamiltonian vector fields, Poisson brackets and the bracket identity
//! `[X_f, X_g] = -X_{f,g}`.

use hjkit::expr::ScalarField;
use hjkit::symplectic::{hamiltonian_vf, lie_bracket, poisson, poisson_bracket_field, VectorField};
use nalgebra::DVector;

fn main() -> hjkit::Result<()> {
    let h = ScalarField::parse("(p1^2 + p2^2)/2", 2)?;
    let l = ScalarField::parse("q1*p2 - q2*p1", 2)?;
    let f = ScalarField::parse("q1^2*p2 + sin(q2)*p1", 2)?;
    let x = DVector::from_column_slice(&[0.3, -0.7, 1.1, 0.4]);

    println!("X_H(x)   = {:?}", hamiltonian_vf(&h).eval(&x)?.as_slice());
    println!("{{L, H}}  = {:.3e}  (angular momentum is conserved)", poisson(&l, &h, &x)?);
    println!("{{f, H}}  = {:.6}", poisson(&f, &h, &x)?);

    let bracket = lie_bracket(&hamiltonian_vf(&f), &hamiltonian_vf(&h), &x)?;
    let field = poisson_bracket_field(&f, &h, &x)?;
    println!("[X_f, X_H] + X_{{f,H}} = {:?}", (bracket + field).as_slice());
    Ok(())
}
