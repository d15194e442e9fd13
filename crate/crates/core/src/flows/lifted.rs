use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::chart::FlowBoxChart;
use super::integrator::{integrate, integrate_with_tangent, FlowResult, IntegratorSettings};
use crate::error::{Error, Result};
use crate::linalg;
use crate::symplectic::{apply_j, fd_jacobian, FieldKind, VectorField};

/// `X_{y_a}`: the Hamiltonian field of the chart coordinate `y_a`,
/// `i_X omega = dy_a`.
///
/// Values come from a chart inversion. Flows are integrated in chart
/// coordinates, where the field is a column of the chart's Poisson matrix
/// and needs no inversion along the trajectory. The Jacobian is a central
/// difference of the value and is flagged as such.
#[derive(Debug, Clone)]
pub struct LiftedField {
    chart: Arc<FlowBoxChart>,
    index: usize,
}

const LIFT_FD_STEP: f64 = 1e-5;

impl LiftedField {
    pub fn new(chart: Arc<FlowBoxChart>, index: usize) -> Self {
        assert!(index < chart.dim(), "coordinate index out of range");
        LiftedField { chart, index }
    }

    pub fn chart(&self) -> &Arc<FlowBoxChart> {
        &self.chart
    }

    /// 0-based coordinate index `a`.
    pub fn index(&self) -> usize {
        self.index
    }

    fn eval_from(&self, x: &DVector<f64>, seed: &DVector<f64>) -> Result<DVector<f64>> {
        let (_, jac) = self.chart.inverse_seeded(x, seed)?;
        let mut ea = DVector::zeros(x.len());
        ea[self.index] = 1.0;
        let w = jac
            .transpose()
            .lu()
            .solve(&ea)
            .ok_or_else(|| Error::RankDegenerate("chart is degenerate at this point".into()))?;
        Ok(apply_j(&w))
    }

    fn chart_rhs(&self) -> impl Fn(&DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> + '_ {
        move |y| self.chart.poisson_column(self.index, y)
    }
}

impl VectorField for LiftedField {
    fn dim(&self) -> usize {
        self.chart.dim()
    }

    fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.eval_from(x, &DVector::zeros(x.len()))
    }

    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (y, _) = self.chart.inverse_with_jacobian(x)?;
        fd_jacobian(|z| self.eval_from(z, &y), x, LIFT_FD_STEP)
    }

    fn kind(&self) -> FieldKind {
        FieldKind::Procedural { fd_jacobian: true }
    }

    fn flow_with_tangent(&self, x0: &DVector<f64>, t: f64, settings: &IntegratorSettings) -> Result<FlowResult> {
        let (y0, jac0) = self.chart.inverse_with_jacobian(x0)?;
        let (w, phi) = integrate_with_tangent(self.chart_rhs(), &y0, t, settings)?;
        let (point, jac_w) = self.chart.forward_with_jacobian(&w)?;
        let jac0_inv = linalg::inverse(&jac0)?;
        let tangent = &jac_w * phi * jac0_inv;
        let (yv, _) = self.chart.poisson_column(self.index, &w)?;
        let velocity = jac_w * yv;
        Ok(FlowResult { point, tangent, velocity })
    }

    fn flow(&self, x0: &DVector<f64>, t: f64, settings: &IntegratorSettings) -> Result<DVector<f64>> {
        if t == 0.0 {
            return Ok(x0.clone());
        }
        let y0 = self.chart.inverse(x0)?;
        let w = integrate(|y| Ok(self.chart.poisson_column(self.index, y)?.0), &y0, t, settings)?;
        self.chart.forward(&w)
    }

    fn describe(&self) -> String {
        format!("X[y{}] of rank-{} chart", self.index + 1, self.chart.rank())
    }
}
