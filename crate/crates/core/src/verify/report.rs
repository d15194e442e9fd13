use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::construct::DomainBox;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FailingProbe {
    pub point: Vec<f64>,
    pub residual: f64,
}

/// Maximum of a residual over a probe set, compared against a tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub check: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub probe_count: usize,
    pub failing: Vec<FailingProbe>,
    pub passed: bool,
    pub seed: Option<u64>,
}

impl ResidualReport {
    /// Folds per-probe residuals. A non-finite residual always fails.
    pub fn from_residuals(check: &str, tolerance: f64, probes: &ProbeSet, residuals: &[f64]) -> Self {
        let mut max_residual = 0.0_f64;
        let mut failing = Vec::new();
        for (p, &r) in probes.points.iter().zip(residuals) {
            let r = if r.is_finite() { r } else { f64::INFINITY };
            max_residual = max_residual.max(r);
            if r > tolerance {
                failing.push(FailingProbe { point: p.iter().copied().collect(), residual: r });
            }
        }
        ResidualReport {
            check: check.to_string(),
            max_residual,
            tolerance,
            probe_count: residuals.len(),
            passed: failing.is_empty() && !residuals.is_empty(),
            failing,
            seed: probes.seed,
        }
    }
}

/// Points at which checks are evaluated, with the seed that drew them.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSet {
    pub points: Vec<DVector<f64>>,
    pub seed: Option<u64>,
}

impl ProbeSet {
    pub fn from_points(points: Vec<DVector<f64>>) -> Self {
        ProbeSet { points, seed: None }
    }

    pub fn in_box(domain: &DomainBox, count: usize, seed: u64) -> Self {
        ProbeSet { points: domain.sample(count, seed), seed: Some(seed) }
    }

    /// Uniform samples in a Euclidean ball.
    pub fn in_ball(center: &DVector<f64>, radius: f64, count: usize, seed: u64) -> Self {
        let n = center.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = Vec::with_capacity(count);
        while points.len() < count {
            let y = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            if y.norm() <= 1.0 {
                points.push(center + y * radius);
            }
        }
        ProbeSet { points, seed: Some(seed) }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
