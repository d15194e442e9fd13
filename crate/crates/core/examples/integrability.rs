//! Classify pairs `(H, F)` as commutative, non-commutative or not
//! integrable.

use hjkit::expr::{MapField, ScalarField};
use hjkit::verify::{integrability_report, ProbeSet};
use nalgebra::DVector;

fn classify(h_src: &str, f_src: &[&str], s: usize, m: &[f64]) -> hjkit::Result<()> {
    let h = ScalarField::parse(h_src, s)?;
    let f = MapField::from_exprs(f_src, s)?;
    let probes = ProbeSet::in_ball(&DVector::from_column_slice(m), 0.3, 30, 0);
    let rep = integrability_report(&h, &f, &probes, 1e-9)?;
    println!(
        "{:<52} l = {}: {} (dF(X_H) {:.1e}, Frobenius {:.1e})",
        format!("{h_src} with F = ({})", f_src.join(", ")),
        rep.l,
        rep.label(),
        rep.first_integral.max_residual,
        rep.frobenius.max_residual
    );
    Ok(())
}

fn main() -> hjkit::Result<()> {
    classify("(q1^2+p1^2)/2", &["(q1^2+p1^2)/2"], 1, &[0.0, 1.0])?;
    classify("(p1^2+p2^2)/2", &["p1", "p2"], 2, &[0.1, -0.2, 1.0, 0.5])?;
    classify("(p1^2+p2^2)/2", &["p1", "p2", "q1*p2-q2*p1"], 2, &[0.1, -0.2, 1.0, 0.5])?;
    classify("(p1^2+p2^2)/2", &["p1", "p2", "q2"], 2, &[0.1, -0.2, 1.0, 0.5])?;
    Ok(())
}
