use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::assumptions::{check_assumptions, vertical_basis};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::expr::{MapField, ProceduralMap, ScalarField};
use crate::flows::{ChartSettings, FlowBoxChart, IntegratorSettings, LiftedField};
use crate::linalg;
use crate::newton::NewtonSettings;
use crate::symplectic::{apply_j_cols, hamiltonian_vf, omega, SharedField, VectorField};

/// Threshold on `|dF(X_H)|` for accepting a constructed first integral.
pub const FIRST_INTEGRAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstructSettings {
    pub chart: ChartSettings,
    pub tolerances: Tolerances,
    pub first_integral_tol: f64,
    pub probes: usize,
    pub seed: u64,
}

impl Default for ConstructSettings {
    fn default() -> Self {
        ConstructSettings::from_tolerances(&Tolerances::default())
    }
}

impl ConstructSettings {
    pub fn from_tolerances(tol: &Tolerances) -> Self {
        let chart = ChartSettings {
            integrator: IntegratorSettings::default().with_tolerances(tol.ode_abs, tol.ode_rel),
            newton: NewtonSettings::default().with_tol(tol.newton),
            rank_tol: tol.rank,
            ..ChartSettings::default()
        };
        ConstructSettings { chart, tolerances: *tol, first_integral_tol: FIRST_INTEGRAL_TOL, probes: 50, seed: 0 }
    }
}

/// Record of one extension step.
#[derive(Debug, Clone, Serialize)]
pub struct ExtensionStep {
    /// Frame size before the step.
    pub r: usize,
    /// Chosen coordinate `y_b` (1-based).
    pub b: usize,
    /// Coordinate order after pivoting: non-pivot indices, then the `r`
    /// pivot indices (all 1-based).
    pub order: Vec<usize>,
    /// `(b, rank, smallest singular value)` for every candidate scanned.
    pub candidates: Vec<(usize, usize, f64)>,
    /// `max |c_i^j|` for `j <= r`, which vanishes for an exact chart.
    pub leading_block: f64,
    pub chart_radius: f64,
}

/// A partially built commuting frame `X_1 = X_H, .., X_r` at `m`.
#[derive(Clone)]
pub struct FrameState {
    base: DVector<f64>,
    hamiltonian: ScalarField,
    fibration: MapField,
    fields: Vec<SharedField>,
    chart: Option<Arc<FlowBoxChart>>,
    history: Vec<ExtensionStep>,
    vertical: DMatrix<f64>,
    settings: ConstructSettings,
}

impl std::fmt::Debug for FrameState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FrameState")
            .field("base", &self.base.as_slice())
            .field("r", &self.fields.len())
            .field("history", &self.history)
            .finish()
    }
}

/// Frame invariants measured at the base point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrameInvariants {
    pub frame_rank: usize,
    pub max_omega: f64,
    pub direct_sum_rank: usize,
    pub required_direct_sum_rank: usize,
}

impl FrameState {
    pub fn initial(h: &ScalarField, pi: &MapField, m: &DVector<f64>, settings: ConstructSettings) -> Result<Self> {
        let vertical = vertical_basis(pi, m, settings.tolerances.rank)?;
        let xh: SharedField = Arc::new(hamiltonian_vf(h));
        Ok(FrameState {
            base: m.clone(),
            hamiltonian: h.clone(),
            fibration: pi.clone(),
            fields: vec![xh],
            chart: None,
            history: Vec::new(),
            vertical,
            settings,
        })
    }

    pub fn r(&self) -> usize {
        self.fields.len()
    }

    pub fn k(&self) -> usize {
        self.fibration.target_dim()
    }

    pub fn s(&self) -> usize {
        self.hamiltonian.s()
    }

    pub fn base(&self) -> &DVector<f64> {
        &self.base
    }

    pub fn fields(&self) -> &[SharedField] {
        &self.fields
    }

    pub fn history(&self) -> &[ExtensionStep] {
        &self.history
    }

    pub fn hamiltonian(&self) -> &ScalarField {
        &self.hamiltonian
    }

    pub fn fibration(&self) -> &MapField {
        &self.fibration
    }

    pub fn settings(&self) -> &ConstructSettings {
        &self.settings
    }

    /// Chart rectifying the current frame, built on first use.
    pub fn chart(&mut self) -> Result<Arc<FlowBoxChart>> {
        if let Some(c) = &self.chart {
            return Ok(c.clone());
        }
        let chart = Arc::new(FlowBoxChart::build(self.base.clone(), self.fields.clone(), self.settings.chart)?);
        log::info!("rank-{} chart built with radius {}", self.r(), chart.domain_radius());
        self.chart = Some(chart.clone());
        Ok(chart)
    }

    pub fn frame_at_base(&self) -> Result<DMatrix<f64>> {
        let cols = self.fields.iter().map(|f| f.eval(&self.base)).collect::<Result<Vec<_>>>()?;
        Ok(linalg::columns(&cols, self.base.len()))
    }

    pub fn invariants(&self) -> Result<FrameInvariants> {
        let x = self.frame_at_base()?;
        let r = self.r();
        let mut max_omega = 0.0_f64;
        for i in 0..r {
            for j in (i + 1)..r {
                max_omega = max_omega.max(omega(&x.column(i).into_owned(), &x.column(j).into_owned()).abs());
            }
        }
        let tol = self.settings.tolerances.rank;
        Ok(FrameInvariants {
            frame_rank: linalg::rank(&x, tol),
            max_omega,
            direct_sum_rank: linalg::rank(&linalg::hstack(&[&x, &self.vertical]), tol),
            required_direct_sum_rank: r + self.vertical.ncols(),
        })
    }

    /// Fails unless the frame is independent, pairwise omega-orthogonal and
    /// meets `Ker Pi_*` trivially at the base point.
    pub fn check_invariants(&self) -> Result<FrameInvariants> {
        let inv = self.invariants()?;
        if inv.frame_rank != self.r() {
            return Err(Error::Precondition(format!("frame has rank {} < {}", inv.frame_rank, self.r())));
        }
        if inv.max_omega > self.settings.chart.ortho_tol {
            return Err(Error::Precondition(format!("frame is not omega-orthogonal ({:e})", inv.max_omega)));
        }
        if inv.direct_sum_rank != inv.required_direct_sum_rank {
            return Err(Error::Precondition(format!(
                "frame meets Ker Pi_* (rank {} < {})",
                inv.direct_sum_rank, inv.required_direct_sum_rank
            )));
        }
        Ok(inv)
    }
}

fn normalized_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    for mut c in out.column_iter_mut() {
        let n = c.norm();
        if n > 0.0 {
            c /= n;
        }
    }
    out
}

/// One inductive step: rectify the frame, reorder the slice coordinates by
/// pivoting the coefficient matrix, and append the best-conditioned
/// admissible `X_{y_b}`.
pub fn extend_frame(mut state: FrameState) -> Result<FrameState> {
    let r = state.r();
    let k = state.k();
    let n = state.base.len();
    if r >= k {
        return Err(Error::Precondition(format!("frame already has {r} >= k = {k} fields")));
    }
    state.check_invariants()?;
    let chart = state.chart()?;
    let frame = state.frame_at_base()?;
    let rank_tol = state.settings.tolerances.rank;

    // D psi at y = 0 is [X_1(m) .. X_r(m) | S]; X_{y_a}(m) = J (D psi^{-T} e_a).
    let b_mat = linalg::hstack(&[&frame, chart.slice()]);
    let lifted_at_m = apply_j_cols(&linalg::inverse(&b_mat)?.transpose());
    // X_i = sum_a c_i^a X_{y_a}; column i of `coeffs` holds c_i.
    let lu = lifted_at_m.clone().lu();
    let mut coeffs = DMatrix::zeros(n, r);
    for i in 0..r {
        let c = lu
            .solve(&frame.column(i).into_owned())
            .ok_or_else(|| Error::RankDegenerate("lifted fields are dependent at m".into()))?;
        coeffs.set_column(i, &c);
    }
    let leading_block = coeffs.rows(0, r).amax();
    // Reorder the slice coordinates r+1..2s so the trailing r x r block of
    // (c_i^a) is invertible.
    let tail = coeffs.rows(r, n - r).transpose().into_owned();
    let scale = tail.amax().max(f64::MIN_POSITIVE);
    let pivots = linalg::pivot_columns(&tail, r, rank_tol * scale);
    if pivots.len() < r {
        return Err(Error::RankDegenerate(format!("coefficient matrix has only {} pivots, need {r}", pivots.len())));
    }
    let mut order: Vec<usize> = (0..n - r).filter(|j| !pivots.contains(j)).map(|j| j + r).collect();
    order.extend(pivots.iter().map(|j| j + r));

    let required = (r + 1) + state.vertical.ncols();
    let mut candidates = Vec::new();
    let mut best: Option<(usize, f64)> = None;
    let mut best_rank = 0;
    for &a in order.iter().take(n - 2 * r) {
        let col = lifted_at_m.column(a).into_owned();
        let col = DMatrix::from_column_slice(n, 1, col.as_slice());
        let stacked = normalized_columns(&linalg::hstack(&[&frame, &col, &state.vertical]));
        let rank = linalg::rank(&stacked, rank_tol);
        let sigma = linalg::min_singular_value(&stacked);
        candidates.push((a + 1, rank, sigma));
        best_rank = best_rank.max(rank);
        if rank == required && best.is_none_or(|(_, s)| sigma > s) {
            best = Some((a, sigma));
        }
    }
    let Some((b, sigma)) = best else {
        return Err(Error::NoAdmissibleIndex { r, best_rank, required });
    };
    log::info!("frame step r={r}: chose y{} (sigma_min {sigma:e})", b + 1);
    state.history.push(ExtensionStep {
        r,
        b: b + 1,
        order: order.iter().map(|a| a + 1).collect(),
        candidates,
        leading_block,
        chart_radius: chart.domain_radius(),
    });
    state.fields.push(Arc::new(LiftedField::new(chart, b)));
    state.chart = None;
    Ok(state)
}

/// The chart coordinates `y_{from+1} .. y_{2s}` as a map on phase space.
pub struct ChartCoordinates {
    chart: Arc<FlowBoxChart>,
    from: usize,
}

impl ChartCoordinates {
    pub fn new(chart: Arc<FlowBoxChart>, from: usize) -> Self {
        assert!(from < chart.dim());
        ChartCoordinates { chart, from }
    }

    pub fn chart(&self) -> &Arc<FlowBoxChart> {
        &self.chart
    }
}

impl ProceduralMap for ChartCoordinates {
    fn input_dim(&self) -> usize {
        self.chart.dim()
    }

    fn output_dim(&self) -> usize {
        self.chart.dim() - self.from
    }

    fn eval_with_jacobian(&self, x: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let p = DVector::from_column_slice(x);
        let (y, jac) = self.chart.inverse_with_jacobian(&p)?;
        let dinv = linalg::inverse(&jac)?;
        let l = self.output_dim();
        Ok((y.rows(self.from, l).into_owned(), dinv.rows(self.from, l).into_owned()))
    }

    fn eval(&self, x: &[f64]) -> Result<DVector<f64>> {
        let y = self.chart.inverse(&DVector::from_column_slice(x))?;
        Ok(y.rows(self.from, self.output_dim()).into_owned())
    }

    fn describe(&self) -> String {
        format!("chart coordinates y{}..y{}", self.from + 1, self.chart.dim())
    }
}

/// Probe diagnostics of a constructed first-integrals submersion.
#[derive(Debug, Clone, Serialize)]
pub struct FirstIntegralDiagnostics {
    pub probes: usize,
    pub seed: u64,
    pub probe_radius: f64,
    /// `max |dF(X_H)|`.
    pub first_integral: f64,
    /// Smallest `rank [Ker Pi_* | Ker F_*]` seen.
    pub transversality_rank: usize,
    /// `max |omega(u, v)|` over an orthonormal basis of `Ker F_*`.
    pub isotropy: f64,
    pub passed: bool,
}

#[derive(Clone)]
pub struct FirstIntegralSubmersion {
    pub map: MapField,
    pub chart: Arc<FlowBoxChart>,
    pub history: Vec<ExtensionStep>,
    pub diagnostics: FirstIntegralDiagnostics,
}

impl std::fmt::Debug for FirstIntegralSubmersion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FirstIntegralSubmersion")
            .field("chart", &self.chart)
            .field("history", &self.history)
            .field("diagnostics", &self.diagnostics)
            .finish()
    }
}

/// Uniform samples in the ball of the given radius, pushed through the chart.
pub fn chart_probes(chart: &FlowBoxChart, radius: f64, count: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
    let n = chart.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let y = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        if y.norm() > 1.0 {
            continue;
        }
        out.push(chart.forward(&(y * radius))?);
    }
    Ok(out)
}

/// Runs the frame extension from `X_1 = X_H` to `r = k` and returns the
/// trailing coordinates of the final chart as first integrals.
pub fn build_first_integrals(
    h: &ScalarField,
    pi: &MapField,
    m: &DVector<f64>,
    settings: &ConstructSettings,
) -> Result<FirstIntegralSubmersion> {
    let report = check_assumptions(h, pi, m, settings.tolerances.rank)?;
    if let Some(e) = report.as_error() {
        return Err(e);
    }
    let k = report.k;
    let mut state = FrameState::initial(h, pi, m, *settings)?;
    while state.r() < k {
        state = extend_frame(state)?;
        state.check_invariants()?;
    }
    let chart = state.chart()?;
    let map = MapField::procedural(Arc::new(ChartCoordinates::new(chart.clone(), k)));
    let diagnostics = diagnose(h, pi, &map, &chart, settings)?;
    if !diagnostics.passed {
        return Err(Error::Verification(format!(
            "first integrals failed at probes: |dF(X_H)| = {:e}, transversality rank {}, isotropy {:e}",
            diagnostics.first_integral, diagnostics.transversality_rank, diagnostics.isotropy
        )));
    }
    Ok(FirstIntegralSubmersion { map, chart, history: state.history, diagnostics })
}

fn diagnose(
    h: &ScalarField,
    pi: &MapField,
    f: &MapField,
    chart: &FlowBoxChart,
    settings: &ConstructSettings,
) -> Result<FirstIntegralDiagnostics> {
    let xh = hamiltonian_vf(h);
    let n = chart.dim();
    let radius = 0.5 * chart.domain_radius();
    let tol = settings.tolerances.rank;
    let mut first_integral = 0.0_f64;
    let mut transversality_rank = n;
    let mut isotropy = 0.0_f64;
    for x in chart_probes(chart, radius, settings.probes, settings.seed)? {
        let df = f.jacobian(x.as_slice())?;
        first_integral = first_integral.max((&df * xh.eval(&x)?).amax());
        let ker_f = linalg::null_space(&df, tol);
        let ker_pi = vertical_basis(pi, &x, tol)?;
        transversality_rank = transversality_rank.min(linalg::rank(&linalg::hstack(&[&ker_pi, &ker_f]), tol));
        let gram = ker_f.transpose() * apply_j_cols(&ker_f);
        isotropy = isotropy.max(gram.amax());
    }
    let passed = first_integral <= settings.first_integral_tol
        && transversality_rank == n
        && isotropy <= settings.tolerances.residual;
    Ok(FirstIntegralDiagnostics {
        probes: settings.probes,
        seed: settings.seed,
        probe_radius: radius,
        first_integral,
        transversality_rank,
        isotropy,
        passed,
    })
}
