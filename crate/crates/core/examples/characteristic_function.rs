//! Hamilton's characteristic function from a complete solution over the
//! configuration projection.

use std::sync::Arc;

use hjkit::construct::{CompleteSolution, DomainBox};
use hjkit::expr::{MapField, ScalarField};
use hjkit::standard::{gradient_consistency, verify_characteristic, CharacteristicFunction};
use hjkit::verify::ProbeSet;
use nalgebra::DVector;

fn main() -> hjkit::Result<()> {
    // Sigma(q, E) = (q, sqrt(2E - q^2)) for the harmonic oscillator.
    let h = ScalarField::parse("(q1^2 + p1^2)/2", 1)?;
    let map = MapField::from_exprs(&["q1", "sqrt(2*p1 - q1^2)"], 1)?;
    let domain = DomainBox::new(&DVector::from_column_slice(&[0.0, 1.0]), &DVector::from_column_slice(&[0.5, 0.3]));
    let sigma = Arc::new(CompleteSolution::analytic(map, 1, domain)?);

    let q0 = DVector::from_column_slice(&[0.0]);
    let w = CharacteristicFunction::from_solution(sigma, &DVector::from_column_slice(&[1.0]), &q0)?;
    for q in [-0.4, -0.2, 0.0, 0.2, 0.4] {
        let q = DVector::from_column_slice(&[q]);
        let exact = q[0] * (2.0_f64 - q[0] * q[0]).sqrt() / 2.0 + (q[0] / 2f64.sqrt()).asin();
        println!("W({:>4}) = {:+.12}  exact {:+.12}", q[0], w.eval(&q)?, exact);
    }
    let probes = ProbeSet::from_points((0..9).map(|i| DVector::from_column_slice(&[-0.4 + 0.1 * i as f64])).collect());
    let energy = verify_characteristic(&w, &h, &probes, 1e-6)?;
    let gradient = gradient_consistency(&w, &probes, 1e-6)?;
    println!("energy variation {:.2e}, gradient mismatch {:.2e}", energy.max_residual, gradient.max_residual);
    Ok(())
}
