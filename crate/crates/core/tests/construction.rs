use std::sync::Arc;

use hjkit::construct::*;
use hjkit::expr::{MapField, ScalarField};
use hjkit::linalg;
use nalgebra::DVector;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

#[test]
fn two_degree_of_freedom_pipeline() {
    let h = ScalarField::parse("(p1^2+p2^2)/2+q1^2", 2).unwrap();
    let pi = MapField::from_exprs(&["q1", "q2"], 2).unwrap();
    let m = v(&[0.3, 0.1, 1.0, 0.7]);
    let fi = build_first_integrals(&h, &pi, &m, &ConstructSettings::default()).unwrap();
    assert!(fi.diagnostics.passed);
    let sigma = duality_sigma(&pi, &fi, &m, &SigmaSettings::default()).unwrap();
    let stacked = pi.stack(&fi.map).unwrap();
    let mut worst = 0.0_f64;
    for z in sigma.domain().sample(100, 7) {
        let x = sigma.eval(&z).unwrap();
        worst = worst.max((stacked.eval(x.as_slice()).unwrap() - &z).amax());
    }
    assert!(worst <= 1e-8);

    let generic = duality_sigma_map(&pi, &fi.map, &m, &SigmaSettings::default()).unwrap();
    for z in sigma.domain().sample(5, 11) {
        let (a, ja) = sigma.eval_with_jacobian(&z).unwrap();
        let (b, jb) = generic.eval_with_jacobian(&z).unwrap();
        assert!((a - b).amax() < 1e-9 && (ja - jb).amax() < 1e-7);
    }
    let sigma = Arc::new(sigma);
    let f2 = duality_integrals(sigma.clone());
    for z in sigma.domain().sample(5, 9) {
        let x = sigma.eval(&z).unwrap();
        let (val, d2) = f2.eval_with_jacobian(x.as_slice()).unwrap();
        assert!((val - sigma.split(&z).1).amax() < 1e-8);
        let d1 = fi.map.jacobian(x.as_slice()).unwrap();
        let both = nalgebra::DMatrix::from_fn(4, 4, |i, j| if i < 2 { d1[(i, j)] } else { d2[(i - 2, j)] });
        assert_eq!(linalg::rank(&both, 1e-6), 2);
    }
}
