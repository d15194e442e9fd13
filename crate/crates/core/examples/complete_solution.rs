//! Invert `(Pi, F)` into a complete solution `Sigma(n, lambda)` and verify
//! the generalized Hamilton-Jacobi equation on it.

use hjkit::construct::{build_first_integrals, duality_sigma, ConstructSettings, SigmaSettings};
use hjkit::expr::{MapField, ScalarField};
use hjkit::verify::{self, ProbeSet};
use nalgebra::DVector;

fn main() -> hjkit::Result<()> {
    let h = ScalarField::parse("(q1^2 + q2^2 + p1^2 + p2^2)/2", 2)?;
    let pi = MapField::from_exprs(&["q1", "q2"], 2)?;
    let m = DVector::from_column_slice(&[0.3, 0.1, 1.0, 0.7]);
    let fi = build_first_integrals(&h, &pi, &m, &ConstructSettings::default())?;
    let sigma = duality_sigma(&pi, &fi, &m, &SigmaSettings::default())?;
    println!("Sigma defined on {:?}", sigma.domain());

    let probes = ProbeSet::in_box(sigma.domain(), 20, 0);
    let stacked = pi.stack(&fi.map)?;
    for rep in [
        verify::hje_residual(&sigma, &h, &pi, &probes, 1e-5)?,
        verify::isotropy_residual(&sigma, &probes, 1e-5)?,
        verify::sigma_roundtrip(&sigma, &stacked, &probes, 1e-8)?,
    ] {
        println!("{:<16} max {:.2e} passed {}", rep.check, rep.max_residual, rep.passed);
    }
    Ok(())
}
