use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::frame::FirstIntegralSubmersion;
use crate::error::{Error, Result};
use crate::expr::{MapField, ProceduralMap};
use crate::flows::FlowBoxChart;
use crate::linalg;
use crate::newton::{self, NewtonSettings};

/// Axis-aligned box `center +- half_widths`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainBox {
    pub center: Vec<f64>,
    pub half_widths: Vec<f64>,
}

impl DomainBox {
    pub fn new(center: &DVector<f64>, half_widths: &DVector<f64>) -> Self {
        DomainBox { center: center.iter().copied().collect(), half_widths: half_widths.iter().copied().collect() }
    }

    pub fn cube(center: &DVector<f64>, half_width: f64) -> Self {
        DomainBox { center: center.iter().copied().collect(), half_widths: vec![half_width; center.len()] }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.center)
    }

    pub fn contains(&self, z: &DVector<f64>) -> bool {
        z.len() == self.dim() && (0..self.dim()).all(|i| (z[i] - self.center[i]).abs() <= self.half_widths[i])
    }

    pub fn scaled(&self, factor: f64) -> Self {
        DomainBox { center: self.center.clone(), half_widths: self.half_widths.iter().map(|h| h * factor).collect() }
    }

    pub fn min_edge(&self) -> f64 {
        2.0 * self.half_widths.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Seeded uniform samples.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<DVector<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                DVector::from_fn(self.dim(), |i, _| self.center[i] + self.half_widths[i] * rng.gen_range(-1.0..=1.0))
            })
            .collect()
    }

    /// All `2^dim` corners (only sensible for small `dim`).
    pub fn corners(&self) -> Vec<DVector<f64>> {
        let d = self.dim();
        (0..(1usize << d))
            .map(|mask| {
                DVector::from_fn(d, |i, _| {
                    let sign = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
                    self.center[i] + sign * self.half_widths[i]
                })
            })
            .collect()
    }
}

#[derive(Clone)]
pub enum SigmaMap {
    /// Closed-form `Sigma`. The flat argument `(n, lambda)` is exposed to
    /// expression components under the names `q1 .. qs, p1 .. ps`.
    Analytic(MapField),
    /// `Sigma = (Pi, F)^{-1}`, evaluated by Newton seeded at `seed`.
    Inverse { stacked: MapField, seed: DVector<f64> },
    /// `Sigma = (Pi, F)^{-1}` for `F = (y_{k+1} .. y_{2s})` of a flow-box
    /// chart `psi`: solves `Pi(psi(u, lambda)) = n` for the leading chart
    /// coordinates `u`.
    Chart { pi: MapField, chart: Arc<FlowBoxChart> },
}

/// A local complete solution `Sigma: N x Lambda -> R^{2s}` on a box.
#[derive(Clone)]
pub struct CompleteSolution {
    k: usize,
    map: SigmaMap,
    domain: DomainBox,
    newton: NewtonSettings,
}

impl std::fmt::Debug for CompleteSolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.map {
            SigmaMap::Analytic(_) => "analytic",
            SigmaMap::Inverse { .. } => "inverse",
            SigmaMap::Chart { .. } => "chart",
        };
        f.debug_struct("CompleteSolution")
            .field("k", &self.k)
            .field("kind", &kind)
            .field("domain", &self.domain)
            .finish()
    }
}

/// Straight-line continuation steps used when a direct Newton solve fails.
const CONTINUATION_STEPS: usize = 8;

fn solve_with_continuation<F>(
    f: F,
    target: &DVector<f64>,
    seed: &DVector<f64>,
    start: &DVector<f64>,
    settings: &NewtonSettings,
) -> Result<newton::NewtonOutcome>
where
    F: Fn(&DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)>,
{
    let direct = newton::solve(
        |x| {
            let (v, j) = f(x)?;
            Ok((v - target, j))
        },
        seed,
        settings,
    );
    if direct.is_ok() {
        return direct;
    }
    // `start` is the image of `seed`; walk the target from there.
    let mut x = seed.clone();
    let mut out = direct;
    for step in 1..=CONTINUATION_STEPS {
        let t = step as f64 / CONTINUATION_STEPS as f64;
        let goal = start + (target - start) * t;
        out = newton::solve(
            |z| {
                let (v, j) = f(z)?;
                Ok((v - &goal, j))
            },
            &x,
            settings,
        );
        x = out.as_ref().map_err(Clone::clone)?.x.clone();
    }
    out
}

impl CompleteSolution {
    pub fn analytic(map: MapField, k: usize, domain: DomainBox) -> Result<Self> {
        if map.target_dim() != map.dim() || domain.dim() != map.dim() || k == 0 || k >= map.dim() {
            return Err(Error::DimensionMismatch { expected: map.dim(), got: map.target_dim() });
        }
        Ok(CompleteSolution { k, map: SigmaMap::Analytic(map), domain, newton: NewtonSettings::default() })
    }

    pub fn with_newton(mut self, newton: NewtonSettings) -> Self {
        self.newton = newton;
        self
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn s(&self) -> usize {
        self.dim() / 2
    }

    pub fn l(&self) -> usize {
        self.dim() - self.k
    }

    pub fn domain(&self) -> &DomainBox {
        &self.domain
    }

    pub fn map(&self) -> &SigmaMap {
        &self.map
    }

    pub fn newton(&self) -> &NewtonSettings {
        &self.newton
    }

    /// Splits `(n, lambda)`.
    pub fn split(&self, z: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        (z.rows(0, self.k).into_owned(), z.rows(self.k, self.l()).into_owned())
    }

    pub fn eval(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.eval_with_jacobian(z)?.0)
    }

    /// `Sigma(n, lambda)` and its Jacobian.
    pub fn eval_with_jacobian(&self, z: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: z.len() });
        }
        match &self.map {
            SigmaMap::Analytic(m) => m.eval_with_jacobian(z.as_slice()),
            SigmaMap::Inverse { stacked, seed } => {
                let f = |x: &DVector<f64>| stacked.eval_with_jacobian(x.as_slice());
                let out = solve_with_continuation(f, z, seed, &self.domain.center(), &self.newton)?;
                let jac = linalg::inverse(&out.jacobian)
                    .map_err(|_| Error::Transversality("(Pi, F) is singular at Sigma(n, lambda)".into()))?;
                Ok((out.x, jac))
            }
            SigmaMap::Chart { pi, chart } => self.eval_chart(pi, chart, z),
        }
    }

    fn eval_chart(
        &self,
        pi: &MapField,
        chart: &FlowBoxChart,
        z: &DVector<f64>,
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let (k, n) = (self.k, self.dim());
        let (target, lambda) = self.split(z);
        let point = |u: &DVector<f64>| {
            let mut y = DVector::zeros(n);
            y.rows_mut(0, k).copy_from(u);
            y.rows_mut(k, n - k).copy_from(&lambda);
            y
        };
        // Pi o psi restricted to the leading coordinates, with its Jacobian.
        let restricted = |u: &DVector<f64>| -> Result<(DVector<f64>, DMatrix<f64>)> {
            let (x, dpsi) = chart.forward_with_jacobian(&point(u))?;
            let (v, dpi) = pi.eval_with_jacobian(x.as_slice())?;
            Ok((v, dpi * dpsi.columns(0, k)))
        };
        let center = DVector::from_column_slice(&self.domain.center[..k]);
        let out = solve_with_continuation(restricted, &target, &DVector::zeros(k), &center, &self.newton)?;
        let (x, dpsi) = chart.forward_with_jacobian(&point(&out.x))?;
        let dpi = pi.jacobian(x.as_slice())?;
        let a_inv = linalg::inverse(&(&dpi * dpsi.columns(0, k)))
            .map_err(|_| Error::Transversality("(Pi, F) is singular at Sigma(n, lambda)".into()))?;
        // dy/dz = [[A^-1, -A^-1 B], [0, I]] with A, B the blocks of D(Pi o psi).
        let mut dy = DMatrix::zeros(n, n);
        dy.view_mut((0, 0), (k, k)).copy_from(&a_inv);
        dy.view_mut((0, k), (k, n - k)).copy_from(&(-&a_inv * (&dpi * dpsi.columns(k, n - k))));
        dy.view_mut((k, k), (n - k, n - k)).fill_with_identity();
        Ok((x, dpsi * dy))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaSettings {
    pub newton: NewtonSettings,
    /// Starting half-width of the domain box; `None` uses `default_half_width`.
    pub initial_half_width: Option<f64>,
    pub min_edge: f64,
    /// Random interior points checked in addition to the corners.
    pub interior_probes: usize,
    pub seed: u64,
    pub roundtrip_tol: f64,
    pub rank_tol: f64,
}

impl Default for SigmaSettings {
    fn default() -> Self {
        SigmaSettings {
            newton: NewtonSettings::default(),
            initial_half_width: None,
            min_edge: 1e-3,
            interior_probes: 8,
            seed: 0,
            roundtrip_tol: 1e-8,
            rank_tol: 1e-9,
        }
    }
}

const DEFAULT_HALF_WIDTH: f64 = 0.25;

/// Half-width of a cube in `(n, lambda)` whose preimage fits in a ball of
/// the given radius around `m`, to first order.
pub fn half_width_for_radius(stacked_jacobian: &DMatrix<f64>, radius: f64) -> f64 {
    let d = stacked_jacobian.ncols() as f64;
    // Images of the radius-ball contain a ball of radius sigma_min * radius.
    linalg::min_singular_value(stacked_jacobian) * radius / d.sqrt()
}

/// `Sigma = (Pi, F)^{-1}` for constructed first integrals, solved in the
/// coordinates of their flow-box chart.
pub fn duality_sigma(
    pi: &MapField,
    f: &FirstIntegralSubmersion,
    m: &DVector<f64>,
    settings: &SigmaSettings,
) -> Result<CompleteSolution> {
    let map = SigmaMap::Chart { pi: pi.clone(), chart: f.chart.clone() };
    sigma_on_box(pi, &f.map, map, m, settings)
}

/// `Sigma = (Pi, F)^{-1}` for any `F`, by Newton on `(Pi, F)(x) = (n, lambda)`
/// seeded at `m`.
pub fn duality_sigma_map(
    pi: &MapField,
    f: &MapField,
    m: &DVector<f64>,
    settings: &SigmaSettings,
) -> Result<CompleteSolution> {
    let stacked = pi.stack(f)?;
    let map = SigmaMap::Inverse { stacked, seed: m.clone() };
    sigma_on_box(pi, f, map, m, settings)
}

/// Validates transversality at `m` and shrinks a box around
/// `(Pi(m), F(m))` by halving until every probe inverts and round-trips.
fn sigma_on_box(
    pi: &MapField,
    f: &MapField,
    map: SigmaMap,
    m: &DVector<f64>,
    settings: &SigmaSettings,
) -> Result<CompleteSolution> {
    let stacked = pi.stack(f)?;
    let n = stacked.dim();
    let k = pi.target_dim();
    if stacked.target_dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: stacked.target_dim() });
    }
    let (center, jac) = stacked.eval_with_jacobian(m.as_slice())?;
    if linalg::rank(&jac, settings.rank_tol) != n {
        return Err(Error::Transversality(format!(
            "stacked Jacobian of (Pi, F) has rank {} < {n} at m",
            linalg::rank(&jac, settings.rank_tol)
        )));
    }
    let half = settings.initial_half_width.unwrap_or(DEFAULT_HALF_WIDTH);
    let mut sol = CompleteSolution { k, map, domain: DomainBox::cube(&center, half), newton: settings.newton };
    loop {
        if sol.domain.min_edge() < settings.min_edge {
            return Err(Error::DomainTooSmall(format!("Sigma domain edge fell below {}", settings.min_edge)));
        }
        match validate(&sol, &stacked, settings) {
            Ok(()) => {
                log::info!("Sigma domain validated with half-width {}", sol.domain.half_widths[0]);
                return Ok(sol);
            }
            Err(e) => {
                log::debug!("Sigma domain half-width {} rejected: {e}", sol.domain.half_widths[0]);
                sol.domain = sol.domain.scaled(0.5);
            }
        }
    }
}

fn validate(sol: &CompleteSolution, stacked: &MapField, settings: &SigmaSettings) -> Result<()> {
    let mut probes = if sol.dim() <= 6 { sol.domain.corners() } else { Vec::new() };
    probes.extend(sol.domain.sample(settings.interior_probes.max(1), settings.seed));
    for z in probes {
        let (x, jac) = sol.eval_with_jacobian(&z)?;
        let back = stacked.eval(x.as_slice())?;
        if (back - &z).amax() > settings.roundtrip_tol {
            return Err(Error::Verification("round trip".into()));
        }
        if linalg::rank(&jac, settings.rank_tol) != sol.dim() {
            return Err(Error::Transversality("singular Sigma Jacobian".into()));
        }
    }
    Ok(())
}

/// `F = p_Lambda o Sigma^{-1}`: the first integrals dual to a complete
/// solution.
pub struct SigmaInverse {
    sigma: Arc<CompleteSolution>,
}

impl SigmaInverse {
    pub fn new(sigma: Arc<CompleteSolution>) -> Self {
        SigmaInverse { sigma }
    }

    /// `Sigma^{-1}(x)` and the Jacobian of `Sigma` there.
    pub fn invert(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let sigma = &self.sigma;
        let seed = sigma.domain.center();
        let start = sigma.eval(&seed)?;
        let out = solve_with_continuation(|z| sigma.eval_with_jacobian(z), x, &seed, &start, &sigma.newton)
            .map_err(|_| Error::OutsideChartDomain)?;
        Ok((out.x, out.jacobian))
    }
}

impl ProceduralMap for SigmaInverse {
    fn input_dim(&self) -> usize {
        self.sigma.dim()
    }

    fn output_dim(&self) -> usize {
        self.sigma.l()
    }

    fn eval_with_jacobian(&self, x: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let (z, jac) = self.invert(&DVector::from_column_slice(x))?;
        let inv = linalg::inverse(&jac)?;
        let (k, l) = (self.sigma.k, self.sigma.l());
        Ok((z.rows(k, l).into_owned(), inv.rows(k, l).into_owned()))
    }

    fn describe(&self) -> String {
        "lambda-part of Sigma^{-1}".into()
    }
}

pub fn duality_integrals(sigma: Arc<CompleteSolution>) -> MapField {
    MapField::procedural(Arc::new(SigmaInverse::new(sigma)))
}
