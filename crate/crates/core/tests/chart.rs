use std::sync::Arc;

use hjkit::expr::ScalarField;
use hjkit::flows::{hamiltonian_lift, integrate, ChartSettings, FlowBoxChart, IntegratorSettings};
use hjkit::linalg;
use hjkit::symplectic::{fd_jacobian, hamiltonian_vf, j_matrix, SharedField, VectorField};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn oscillator_chart() -> Arc<FlowBoxChart> {
    let h = ScalarField::parse("(q1^2+q2^2+p1^2+p2^2)/2+q1^2*q2/4", 2).unwrap();
    let frame: Vec<SharedField> = vec![Arc::new(hamiltonian_vf(&h))];
    Arc::new(FlowBoxChart::build(v(&[0.3, 0.1, 1.0, 0.7]), frame, ChartSettings::default()).unwrap())
}

fn chart_points(chart: &FlowBoxChart, count: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = 0.5 * chart.domain_radius();
    (0..count).map(|_| DVector::from_fn(chart.dim(), |_, _| rng.gen_range(-r..r) / 2.0)).collect()
}

#[test]
fn frame_field_is_rectified() {
    let chart = oscillator_chart();
    for y in chart_points(&chart, 20, 1) {
        let (x, dpsi) = chart.forward_with_jacobian(&y).unwrap();
        let w = linalg::solve(&dpsi, &chart.frame()[0].eval(&x).unwrap()).unwrap();
        let mut e = DVector::zeros(4);
        e[0] = 1.0;
        assert!((w - e).amax() < 1e-7);
    }
}

#[test]
fn forward_jacobian_matches_difference_quotient() {
    let chart = oscillator_chart();
    for y in chart_points(&chart, 5, 2) {
        let (_, jac) = chart.forward_with_jacobian(&y).unwrap();
        let fd = fd_jacobian(|z| chart.forward(z), &y, 1e-5).unwrap();
        assert!((jac - fd).amax() < 1e-6);
    }
}

#[test]
fn poisson_column_matches_chart_jacobian() {
    let chart = oscillator_chart();
    let j = j_matrix(2);
    for y in chart_points(&chart, 5, 3) {
        let (_, dpsi) = chart.forward_with_jacobian(&y).unwrap();
        let inv = linalg::inverse(&dpsi).unwrap();
        let poisson = &inv * &j * inv.transpose();
        for a in 0..4 {
            let (col, dcol) = chart.poisson_column(a, &y).unwrap();
            assert!((col - poisson.column(a)).amax() < 1e-8, "column {a}");
            let fd = fd_jacobian(|z| Ok(chart.poisson_column(a, z)?.0), &y, 1e-5).unwrap();
            assert!((dcol - fd).amax() < 1e-6, "derivative of column {a}");
        }
    }
}

#[test]
fn lifted_flow_matches_ambient_integration() {
    let chart = oscillator_chart();
    let settings = IntegratorSettings::default();
    let x0 = chart.forward(&v(&[0.02, -0.03, 0.01, 0.02])).unwrap();
    for a in 1..4 {
        let lift = hamiltonian_lift(&chart, a);
        let chart_flow = lift.flow(&x0, 0.05, &settings).unwrap();
        let ambient = integrate(|x| lift.eval(x), &x0, 0.05, &settings).unwrap();
        assert!((chart_flow - ambient).amax() < 1e-7, "X[y{}]", a + 1);
    }
}

#[test]
fn poisson_matrix_is_invariant_along_the_frame() {
    let chart = oscillator_chart();
    let j = j_matrix(2);
    let poisson = |y: &DVector<f64>| {
        let (_, dpsi) = chart.forward_with_jacobian(y).unwrap();
        let inv = linalg::inverse(&dpsi).unwrap();
        &inv * &j * inv.transpose()
    };
    let y = v(&[0.0, 0.02, -0.01, 0.03]);
    let reference = poisson(&y);
    for t in [-0.05, 0.04, 0.08] {
        let mut shifted = y.clone();
        shifted[0] = t;
        assert!((poisson(&shifted) - &reference).amax() < 1e-8);
    }
}
