use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::integrator::IntegratorSettings;
use crate::error::{Error, Result};
use crate::linalg;
use crate::newton::{self, NewtonSettings};
use crate::symplectic::{apply_j, omega, SharedField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartSettings {
    pub integrator: IntegratorSettings,
    pub newton: NewtonSettings,
    pub rank_tol: f64,
    /// Largest admissible `|omega(X_i(m), X_j(m))|` between frame fields.
    pub ortho_tol: f64,
    pub initial_radius: f64,
    pub min_radius: f64,
    pub boundary_probes: usize,
    /// Skip probing and use this radius.
    pub fixed_radius: Option<f64>,
    /// Inverse images farther than `domain_slack * domain_radius` from the
    /// origin are rejected as outside the chart.
    pub domain_slack: f64,
}

impl Default for ChartSettings {
    fn default() -> Self {
        ChartSettings {
            integrator: IntegratorSettings::default(),
            newton: NewtonSettings::default(),
            rank_tol: 1e-9,
            ortho_tol: 1e-6,
            initial_radius: 0.5,
            min_radius: 1e-3,
            boundary_probes: 20,
            fixed_radius: None,
            domain_slack: 4.0,
        }
    }
}

/// Rectifying chart for commuting fields `X_1..X_r` around `m`:
///
/// `psi(y) = Phi^{y_1}_{X_1} o ... o Phi^{y_r}_{X_r}(m + S (y_{r+1}, ..., y_{2s}))`
///
/// so that `X_i = d/dy_i` on the chart domain.
pub struct FlowBoxChart {
    base: DVector<f64>,
    frame: Vec<SharedField>,
    slice: DMatrix<f64>,
    domain_radius: f64,
    settings: ChartSettings,
}

impl std::fmt::Debug for FlowBoxChart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FlowBoxChart")
            .field("base", &self.base.as_slice())
            .field("rank", &self.frame.len())
            .field("domain_radius", &self.domain_radius)
            .finish()
    }
}

fn normalize_signs(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut col in m.column_iter_mut() {
        let pivot = col.iter().copied().fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if pivot < 0.0 {
            col.neg_mut();
        }
    }
    m
}

impl FlowBoxChart {
    /// Builds the chart with the slice spanned by the trailing left singular
    /// vectors of `[X_1(m) .. X_r(m)]`, then sizes the domain by probing.
    pub fn build(base: DVector<f64>, frame: Vec<SharedField>, settings: ChartSettings) -> Result<Self> {
        let frame_at_m = Self::frame_matrix(&frame, &base)?;
        let slice = normalize_signs(linalg::orthogonal_complement(&frame_at_m, settings.rank_tol));
        Self::with_slice(base, frame, slice, settings)
    }

    /// Builds the chart with a caller-supplied slice basis.
    pub fn with_slice(
        base: DVector<f64>,
        frame: Vec<SharedField>,
        slice: DMatrix<f64>,
        settings: ChartSettings,
    ) -> Result<Self> {
        let n = base.len();
        let r = frame.len();
        if frame.iter().any(|f| f.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: frame.iter().map(|f| f.dim()).find(|d| *d != n).unwrap(),
            });
        }
        if slice.nrows() != n || slice.ncols() + r != n {
            return Err(Error::DimensionMismatch { expected: n - r, got: slice.ncols() });
        }
        let frame_at_m = Self::frame_matrix(&frame, &base)?;
        if linalg::rank(&frame_at_m, settings.rank_tol) != r {
            return Err(Error::RankDegenerate("frame vectors are dependent at the base point".into()));
        }
        for i in 0..r {
            for j in (i + 1)..r {
                let w = omega(&frame_at_m.column(i).into_owned(), &frame_at_m.column(j).into_owned());
                if w.abs() > settings.ortho_tol {
                    return Err(Error::Precondition(format!(
                        "frame fields {} and {} are not omega-orthogonal at the base point ({w:e})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let full = linalg::hstack(&[&frame_at_m, &slice]);
        if linalg::rank(&full, settings.rank_tol) != n {
            return Err(Error::RankDegenerate("slice is not transverse to the frame".into()));
        }
        let mut chart = FlowBoxChart { base, frame, slice, domain_radius: f64::INFINITY, settings };
        chart.domain_radius = match settings.fixed_radius {
            Some(rad) => rad,
            None => chart.probe_radius()?,
        };
        Ok(chart)
    }

    fn frame_matrix(frame: &[SharedField], x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let cols = frame.iter().map(|f| f.eval(x)).collect::<Result<Vec<_>>>()?;
        Ok(linalg::columns(&cols, x.len()))
    }

    fn probe_radius(&mut self) -> Result<f64> {
        let n = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0xc4a7 + n as u64);
        let dirs: Vec<DVector<f64>> = (0..self.settings.boundary_probes)
            .map(|_| {
                let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
                let nv = v.norm();
                if nv > 0.0 {
                    v / nv
                } else {
                    DVector::from_fn(n, |i, _| if i == 0 { 1.0 } else { 0.0 })
                }
            })
            .collect();
        let mut radius = self.settings.initial_radius;
        while radius >= self.settings.min_radius {
            let ok = dirs.iter().all(|d| self.round_trips(&(d * radius)));
            if ok {
                log::debug!("chart of rank {} validated with radius {radius}", self.rank());
                return Ok(radius);
            }
            radius *= 0.5;
        }
        Err(Error::DomainTooSmall(format!("chart radius fell below {}", self.settings.min_radius)))
    }

    fn round_trips(&self, y: &DVector<f64>) -> bool {
        let Ok((p, jac)) = self.forward_with_jacobian(y) else { return false };
        if linalg::min_singular_value(&jac) <= self.settings.rank_tol * linalg::singular_values(&jac)[0] {
            return false;
        }
        match self.inverse_unbounded(&p, &DVector::zeros(self.dim())) {
            Ok((y2, _)) => (y2 - y).norm() <= 1e-6 * (1.0 + y.norm()),
            Err(_) => false,
        }
    }

    pub fn dim(&self) -> usize {
        self.base.len()
    }

    /// Number of rectified frame fields `r`.
    pub fn rank(&self) -> usize {
        self.frame.len()
    }

    pub fn base(&self) -> &DVector<f64> {
        &self.base
    }

    pub fn frame(&self) -> &[SharedField] {
        &self.frame
    }

    pub fn slice(&self) -> &DMatrix<f64> {
        &self.slice
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn settings(&self) -> &ChartSettings {
        &self.settings
    }

    fn slice_point(&self, y: &DVector<f64>) -> DVector<f64> {
        let r = self.rank();
        &self.base + &self.slice * y.rows(r, self.dim() - r)
    }

    /// `psi(y)`.
    pub fn forward(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(y)?;
        let mut x = self.slice_point(y);
        for i in (0..self.rank()).rev() {
            if y[i] != 0.0 {
                x = self.frame[i].flow(&x, y[i], &self.settings.integrator)?;
            }
        }
        Ok(x)
    }

    /// `psi(y)` and `D psi(y)`.
    pub fn forward_with_jacobian(&self, y: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.check(y)?;
        let n = self.dim();
        let r = self.rank();
        let mut x = self.slice_point(y);
        // Accumulated derivative of the flows applied so far.
        let mut acc = DMatrix::identity(n, n);
        let mut jac = DMatrix::zeros(n, n);
        for i in (0..r).rev() {
            let fr = self.frame[i].flow_with_tangent(&x, y[i], &self.settings.integrator)?;
            for j in (i + 1)..r {
                let col = &fr.tangent * jac.column(j);
                jac.set_column(j, &col);
            }
            jac.set_column(i, &fr.velocity);
            acc = &fr.tangent * acc;
            x = fr.point;
        }
        let slice_cols = &acc * &self.slice;
        jac.view_mut((0, r), (n, n - r)).copy_from(&slice_cols);
        Ok((x, jac))
    }

    fn check(&self, y: &DVector<f64>) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: y.len() });
        }
        Ok(())
    }

    fn inverse_unbounded(&self, p: &DVector<f64>, seed: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let out = newton::solve(
            |y| {
                let (x, jac) = self.forward_with_jacobian(y)?;
                Ok((x - p, jac))
            },
            seed,
            &self.settings.newton,
        )
        .map_err(|e| match e {
            Error::NewtonFailed { .. } => Error::OutsideChartDomain,
            other => other,
        })?;
        Ok((out.x, out.jacobian))
    }

    /// `psi^{-1}(p)` and `D psi` there, by Newton from `y = 0`.
    pub fn inverse_with_jacobian(&self, p: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.inverse_seeded(p, &DVector::zeros(self.dim()))
    }

    pub fn inverse_seeded(&self, p: &DVector<f64>, seed: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.check(p)?;
        let (y, jac) = self.inverse_unbounded(p, seed)?;
        if y.norm() > self.settings.domain_slack * self.domain_radius {
            return Err(Error::OutsideChartDomain);
        }
        Ok((y, jac))
    }

    pub fn inverse(&self, p: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.inverse_with_jacobian(p)?.0)
    }

    /// All coordinate differentials at `p`: row `a` is `dy_a`.
    pub fn coordinate_differentials(&self, p: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (_, jac) = self.inverse_with_jacobian(p)?;
        linalg::inverse(&jac).map_err(|_| Error::RankDegenerate("chart is degenerate at this point".into()))
    }

    /// `dy_a` at `p` (0-based `a`).
    pub fn coordinate_differential(&self, a: usize, p: &DVector<f64>) -> Result<DVector<f64>> {
        if a >= self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: a });
        }
        Ok(self.coordinate_differentials(p)?.row(a).transpose())
    }

    /// Column `a` of the chart's Poisson matrix `D psi^{-1} J D psi^{-T}`,
    /// i.e. the field `X_{y_a}` expressed in chart coordinates, with its
    /// derivative with respect to `y`.
    ///
    /// The frame flows are symplectic, so this matrix does not depend on
    /// `y_1..y_r`, and at `y_1 = .. = y_r = 0` the chart Jacobian is simply
    /// `[X_1(sigma) .. X_r(sigma) | S]` with `sigma` the slice point.
    pub fn poisson_column(&self, a: usize, y: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let n = self.dim();
        let r = self.rank();
        let sigma = self.slice_point(y);
        let mut b = DMatrix::zeros(n, n);
        let mut frame_jacs = Vec::with_capacity(r);
        for (i, f) in self.frame.iter().enumerate() {
            let (v, dv) = f.eval_with_jacobian(&sigma)?;
            b.set_column(i, &v);
            frame_jacs.push(dv);
        }
        b.view_mut((0, r), (n, n - r)).copy_from(&self.slice);
        let degenerate = || Error::RankDegenerate("chart is degenerate at the slice point".into());
        let lu = b.clone().lu();
        let lu_t = b.transpose().lu();
        let mut ea = DVector::zeros(n);
        ea[a] = 1.0;
        let w = lu_t.solve(&ea).ok_or_else(degenerate)?;
        let yv = lu.solve(&apply_j(&w)).ok_or_else(degenerate)?;
        let mut dy = DMatrix::zeros(n, n);
        for c in 0..(n - r) {
            let sc = self.slice.column(c).into_owned();
            let mut db = DMatrix::zeros(n, n);
            for (i, dv) in frame_jacs.iter().enumerate() {
                db.set_column(i, &(dv * &sc));
            }
            // d(B^-1 J B^-T e_a) = -B^-1 (dB Y + J B^-T dB^T w)
            let inner = lu_t.solve(&(db.transpose() * &w)).ok_or_else(degenerate)?;
            let col = lu.solve(&(&db * &yv + apply_j(&inner))).ok_or_else(degenerate)?;
            dy.set_column(r + c, &(-col));
        }
        Ok((yv, dy))
    }
}

/// Hamiltonian field `X_{y_a}` of the chart coordinate `y_a`.
pub fn hamiltonian_lift(chart: &Arc<FlowBoxChart>, a: usize) -> super::LiftedField {
    super::LiftedField::new(chart.clone(), a)
}
