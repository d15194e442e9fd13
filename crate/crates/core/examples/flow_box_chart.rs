//! Rectify a Hamiltonian field with a flow-box chart and inspect the
//! Hamiltonian fields of the chart coordinates.

use std::sync::Arc;

use hjkit::expr::ScalarField;
use hjkit::flows::{hamiltonian_lift, ChartSettings, FlowBoxChart};
use hjkit::linalg;
use hjkit::symplectic::{hamiltonian_vf, SharedField, VectorField};
use nalgebra::DVector;

fn main() -> hjkit::Result<()> {
    let h = ScalarField::parse("(q1^2 + q2^2 + p1^2 + p2^2)/2", 2)?;
    let m = DVector::from_column_slice(&[0.3, 0.1, 1.0, 0.7]);
    let frame: Vec<SharedField> = vec![Arc::new(hamiltonian_vf(&h))];
    let chart = Arc::new(FlowBoxChart::build(m, frame, ChartSettings::default())?);
    println!("chart radius {}", chart.domain_radius());

    let y = DVector::from_column_slice(&[0.1, -0.05, 0.02, 0.03]);
    let (x, dpsi) = chart.forward_with_jacobian(&y)?;
    let pushed = linalg::solve(&dpsi, &chart.frame()[0].eval(&x)?)?;
    println!("psi(y)          = {:?}", x.as_slice());
    println!("psi^-1_* X_H    = {:?}", pushed.as_slice());
    println!("psi^-1(psi(y))  = {:?}", chart.inverse(&x)?.as_slice());
    for a in 1..4 {
        println!("X[y{}](psi(y))   = {:?}", a + 1, hamiltonian_lift(&chart, a).eval(&x)?.as_slice());
    }
    Ok(())
}
