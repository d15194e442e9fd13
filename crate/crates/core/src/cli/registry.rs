use super::config::{FibrationSpec, HamiltonianSpec, ScenarioConfig};
use crate::config::Tolerances;

/// A built-in scenario with the outcomes it is expected to produce.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub expect_check: bool,
    pub expect_construct: bool,
}

impl Scenario {
    pub fn name(&self) -> &str {
        self.config.name.as_deref().unwrap_or("")
    }
}

fn scenario(name: &str, s: usize, hamiltonian: HamiltonianSpec, base_point: &[f64]) -> Scenario {
    let fibration = (1..=s).map(|i| format!("q{i}")).collect();
    Scenario {
        config: ScenarioConfig {
            name: Some(name.into()),
            dimension_s: s,
            hamiltonian,
            fibration: FibrationSpec::Components(fibration),
            k: None,
            integrals: None,
            solution: None,
            base_point: base_point.to_vec(),
            tolerances: Tolerances::default(),
            domain_radius: 0.5,
            probes: 50,
            lambda_grid: 3,
            q_grid: 3,
            seed: 0,
        },
        expect_check: true,
        expect_construct: true,
    }
}

fn expr(src: &str) -> HamiltonianSpec {
    HamiltonianSpec::Expression(src.into())
}

pub fn registry() -> Vec<Scenario> {
    vec![
        scenario("free-particle-1", 1, expr("p1^2/2"), &[0.0, 1.0]),
        scenario("free-particle-2", 2, expr("(p1^2+p2^2)/2"), &[0.1, -0.2, 1.0, 0.5]),
        scenario("harmonic-1", 1, expr("(q1^2+p1^2)/2"), &[0.0, 1.0]),
        scenario("harmonic-2", 2, expr("(q1^2+q2^2+p1^2+p2^2)/2"), &[0.3, 0.1, 1.0, 0.7]),
        scenario("anisotropic", 2, expr("(p1^2+p2^2)/2+(q1^2+4*q2^2)/2"), &[0.3, 0.1, 1.0, 0.7]),
        scenario(
            "cometric",
            2,
            HamiltonianSpec::Simple {
                cometric: vec![vec!["1".into(), "0".into()], vec!["0".into(), "1/q1^2".into()]],
                potential: "0".into(),
            },
            &[1.0, 0.2, 0.8, 0.6],
        ),
    ]
}

pub fn lookup(name: &str) -> Option<Scenario> {
    registry().into_iter().find(|s| s.name() == name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_configs_validate() {
        let all = registry();
        assert_eq!(all.len(), 6);
        for sc in &all {
            sc.config.validate().unwrap();
            assert_eq!(ScenarioConfig::from_json(&sc.config.to_json()).unwrap(), sc.config);
        }
        assert!(lookup("harmonic-2").is_some() && lookup("nope").is_none());
    }
}
