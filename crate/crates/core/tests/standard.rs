use std::sync::{Arc, LazyLock};

use hjkit::cli::{self, registry, ScenarioSolution};
use hjkit::construct::DomainBox;
use hjkit::standard::{gradient_consistency, CharacteristicFunction, SimpleHamiltonian};
use hjkit::verify::ProbeSet;
use nalgebra::DVector;

static ANISOTROPIC: LazyLock<ScenarioSolution> = LazyLock::new(|| {
    let sc = registry().into_iter().find(|s| s.name() == "anisotropic").unwrap();
    cli::solve(&sc.config).unwrap()
});

fn v(xs: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(xs)
}

fn boxes(sol: &ScenarioSolution) -> (DomainBox, DomainBox) {
    let d = sol.sigma.domain();
    let part = |r: std::ops::Range<usize>| DomainBox {
        center: d.center[r.clone()].to_vec(),
        half_widths: d.half_widths[r].iter().map(|h| h * 0.8).collect(),
    };
    (part(0..2), part(2..4))
}

#[test]
fn integral_is_path_independent() {
    let sol = &*ANISOTROPIC;
    let (n_box, l_box) = boxes(sol);
    let q0 = n_box.center();
    for lambda in l_box.sample(3, 1) {
        let w = CharacteristicFunction::from_solution(Arc::clone(&sol.sigma), &lambda, &q0).unwrap();
        for q in n_box.sample(4, 2) {
            // Two legs through a corner-aligned midpoint against the straight segment.
            let mid = v(&[q[0], q0[1]]);
            let via = CharacteristicFunction::from_solution(Arc::clone(&sol.sigma), &lambda, &mid).unwrap();
            let two_legs = w.eval(&mid).unwrap() + via.eval(&q).unwrap();
            assert!((two_legs - w.eval(&q).unwrap()).abs() <= 1e-8);
        }
    }
}

#[test]
fn shifting_the_base_point_adds_a_constant() {
    let sol = &*ANISOTROPIC;
    let (n_box, l_box) = boxes(sol);
    let lambda = l_box.center();
    let q0 = n_box.center();
    let q1 = n_box.sample(1, 5).remove(0);
    let w0 = CharacteristicFunction::from_solution(Arc::clone(&sol.sigma), &lambda, &q0).unwrap();
    let w1 = CharacteristicFunction::from_solution(Arc::clone(&sol.sigma), &lambda, &q1).unwrap();
    let shift = w0.eval(&q1).unwrap();
    for q in n_box.sample(5, 6) {
        assert!((w1.eval(&q).unwrap() - (w0.eval(&q).unwrap() - shift)).abs() <= 1e-8);
    }
}

#[test]
fn gradient_of_w_is_the_section() {
    let sol = &*ANISOTROPIC;
    let (n_box, l_box) = boxes(sol);
    for lambda in l_box.sample(2, 8) {
        let w = CharacteristicFunction::from_solution(Arc::clone(&sol.sigma), &lambda, &n_box.center()).unwrap();
        let rep = gradient_consistency(&w, &ProbeSet::in_box(&n_box.scaled(0.9), 8, 9), 1e-6).unwrap();
        assert!(rep.passed, "{rep:?}");
    }
}

#[test]
fn analytic_characteristic_function_of_the_oscillator() {
    // W = q sqrt(2E - q^2)/2 + E asin(q / sqrt(2E)) for H = (q^2 + p^2)/2.
    let e = 1.3_f64;
    let grad = move |q: &DVector<f64>| Ok(v(&[(2.0 * e - q[0] * q[0]).sqrt()]));
    let w = CharacteristicFunction::from_gradient(grad, &v(&[e]), &v(&[0.0]), None);
    for q in [-0.9, -0.3, 0.4, 1.1] {
        let exact = q * (2.0 * e - q * q).sqrt() / 2.0 + e * (q / (2.0 * e).sqrt()).asin();
        assert!((w.eval(&v(&[q])).unwrap() - exact).abs() <= 1e-10);
    }
}

#[test]
fn cometric_scenario_is_positive_definite() {
    let sc = registry().into_iter().find(|s| s.name() == "cometric").unwrap();
    let simple: SimpleHamiltonian = sc.config.simple_hamiltonian().unwrap().unwrap();
    let probes = ProbeSet::in_ball(&sc.config.base_point(), 0.3, 20, 0);
    assert!(simple.min_cometric_eigenvalue(&probes).unwrap() > 0.0);
    let m = sc.config.base_point();
    let h = simple.hamiltonian().eval(m.as_slice()).unwrap();
    let (q1, p1, p2) = (m[0], m[2], m[3]);
    assert!((h - (p1 * p1 + p2 * p2 / (q1 * q1)) / 2.0).abs() < 1e-14);
}
