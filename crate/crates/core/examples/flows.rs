//! Integrate a Hamiltonian flow with its variational equation and check
//! energy conservation and symplecticity of the tangent map.

use hjkit::expr::ScalarField;
use hjkit::flows::{flow_with_tangent, IntegratorSettings};
use hjkit::symplectic::{hamiltonian_vf, j_matrix};
use nalgebra::DVector;

fn main() -> hjkit::Result<()> {
    let h = ScalarField::parse("(p1^2 + p2^2)/2 + (q1^2 + q2^2)/2 + q1^2*q2 - q2^3/3", 2)?;
    let x0 = DVector::from_column_slice(&[0.1, 0.2, 0.3, -0.1]);
    let settings = IntegratorSettings::default();
    let j = j_matrix(2);
    for t in [0.5, 2.0, 10.0] {
        let r = flow_with_tangent(&hamiltonian_vf(&h), &x0, t, &settings)?;
        let drift = (h.eval(r.point.as_slice())? - h.eval(x0.as_slice())?).abs();
        let symplectic = (r.tangent.transpose() * &j * &r.tangent - &j).amax();
        println!("t = {t:>4}: |H - H0| = {drift:.2e}, |D^T J D - J| = {symplectic:.2e}");
    }
    Ok(())
}
