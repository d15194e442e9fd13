//! Parse a phase-space expression and evaluate it with exact derivatives.

use hjkit::expr::{MapField, ScalarField};

fn main() -> hjkit::Result<()> {
    let h = ScalarField::parse("(p1^2 + p2^2)/2 + q1^2*q2 - q2^3/3", 2)?;
    let x = [0.4, -0.2, 1.0, 0.5];
    let (value, grad, hess) = h.jet2(&x)?;
    println!("H        = {}", h.serialize());
    println!("H(x)     = {value}");
    println!("grad H   = {:?}", grad.as_slice());
    println!("hess H   = {hess:.4}");

    let pi = MapField::from_exprs(&["q1", "q2 + p1^2"], 2)?;
    let (v, jac) = pi.eval_with_jacobian(&x)?;
    println!("Pi(x)    = {:?}", v.as_slice());
    println!("D Pi(x)  = {jac:.4}");

    match ScalarField::parse("log(q1)", 1)?.eval(&[-1.0, 0.0]) {
        Ok(v) => println!("log(-1) = {v}"),
        Err(e) => println!("log(-1) rejected: {e}"),
    }
    Ok(())
}
