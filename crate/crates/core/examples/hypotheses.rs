//! Check the two hypotheses of the construction and build a Darboux
//! fibration when none is given.

use hjkit::construct::{build_fibration_prop2, check_assumptions};
use hjkit::expr::{MapField, ScalarField};
use hjkit::symplectic::hamiltonian_vf;
use nalgebra::DVector;

fn main() -> hjkit::Result<()> {
    let h = ScalarField::parse("(q1^2 + p1^2)/2", 1)?;
    let pi = MapField::from_exprs(&["q1"], 1)?;
    for m in [[0.0, 1.0], [1.0, 0.0]] {
        let rep = check_assumptions(&h, &pi, &DVector::from_column_slice(&m), 1e-9)?;
        println!("m = {m:?}: X_H transverse {}, Ker Pi_* coisotropic {}", rep.hypothesis_i, rep.hypothesis_ii);
    }

    // At (1, 0) the field is vertical for q1, so build a fibration instead.
    let m = DVector::from_column_slice(&[1.0, 0.0]);
    let fib = build_fibration_prop2(&hamiltonian_vf(&h), &m, 1, 1e-9)?;
    println!("fibration {:?} (swapped {})", fib.components, fib.swapped);
    println!("hypotheses hold: {}", check_assumptions(&h, &fib.map, &m, 1e-9)?.passed());
    Ok(())
}
