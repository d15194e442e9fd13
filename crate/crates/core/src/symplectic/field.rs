use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::structure::{apply_j, apply_j_cols, omega};
use crate::error::{Error, Result};
use crate::expr::ScalarField;
use crate::flows::{self, FlowResult, IntegratorSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum FieldKind {
    Analytic,
    /// Numerically defined; `fd_jacobian` marks a finite-difference
    /// Jacobian, which reports flag.
    Procedural {
        fd_jacobian: bool,
    },
}

/// A vector field on `R^{2s}` with a Jacobian.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;
    fn kind(&self) -> FieldKind;

    fn eval_with_jacobian(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        Ok((self.eval(x)?, self.jacobian(x)?))
    }

    /// Time-`t` flow together with its derivative and the field value at
    /// the end point. The default integrates the variational equation;
    /// procedural fields override this when they know a cheaper route.
    fn flow_with_tangent(&self, x0: &DVector<f64>, t: f64, settings: &IntegratorSettings) -> Result<FlowResult> {
        flows::flow_with_tangent(self, x0, t, settings)
    }

    fn flow(&self, x0: &DVector<f64>, t: f64, settings: &IntegratorSettings) -> Result<DVector<f64>> {
        flows::flow(self, x0, t, settings)
    }

    fn describe(&self) -> String;
}

impl fmt::Debug for dyn VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorField({})", self.describe())
    }
}

pub type SharedField = Arc<dyn VectorField>;

fn check_dim(expected: usize, x: &DVector<f64>) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch { expected, got: x.len() });
    }
    Ok(())
}

/// `X_f` with `i_{X_f} omega = df`, i.e. `X_f = J grad f = (df/dp, -df/dq)`.
#[derive(Debug, Clone)]
pub struct HamiltonianField {
    f: ScalarField,
}

impl HamiltonianField {
    pub fn new(f: ScalarField) -> Self {
        HamiltonianField { f }
    }

    pub fn function(&self) -> &ScalarField {
        &self.f
    }
}

pub fn hamiltonian_vf(f: &ScalarField) -> HamiltonianField {
    HamiltonianField::new(f.clone())
}

impl VectorField for HamiltonianField {
    fn dim(&self) -> usize {
        self.f.dim()
    }

    fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x)?;
        Ok(apply_j(&self.f.grad(x.as_slice())?))
    }

    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.eval_with_jacobian(x)?.1)
    }

    fn eval_with_jacobian(&self, x: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        check_dim(self.dim(), x)?;
        let (_, g, h) = self.f.jet2(x.as_slice())?;
        Ok((apply_j(&g), apply_j_cols(&h)))
    }

    fn kind(&self) -> FieldKind {
        FieldKind::Analytic
    }

    fn describe(&self) -> String {
        format!("X[{}]", self.f.source())
    }
}

/// Linear field `x -> A x`.
#[derive(Debug, Clone)]
pub struct LinearField {
    a: DMatrix<f64>,
}

impl LinearField {
    pub fn new(a: DMatrix<f64>) -> Self {
        assert!(a.is_square());
        LinearField { a }
    }
}

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        self.a.nrows()
    }
    fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x)?;
        Ok(&self.a * x)
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), x)?;
        Ok(self.a.clone())
    }
    fn kind(&self) -> FieldKind {
        FieldKind::Analytic
    }
    fn describe(&self) -> String {
        "linear".into()
    }
}

/// Constant field.
#[derive(Debug, Clone)]
pub struct ConstantField {
    v: DVector<f64>,
}

impl ConstantField {
    pub fn new(v: DVector<f64>) -> Self {
        ConstantField { v }
    }
}

impl VectorField for ConstantField {
    fn dim(&self) -> usize {
        self.v.len()
    }
    fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), x)?;
        Ok(self.v.clone())
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.dim(), x)?;
        Ok(DMatrix::zeros(self.dim(), self.dim()))
    }
    fn kind(&self) -> FieldKind {
        FieldKind::Analytic
    }
    fn describe(&self) -> String {
        "constant".into()
    }
}

type EvalFn = dyn Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync;
type JacFn = dyn Fn(&DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync;

/// Field given by closures. Without a Jacobian closure the Jacobian is
/// taken by central differences and the field is flagged accordingly.
#[derive(Clone)]
pub struct ClosureField {
    dim: usize,
    eval: Arc<EvalFn>,
    jac: Option<Arc<JacFn>>,
    name: String,
}

impl ClosureField {
    pub fn new(
        dim: usize,
        name: &str,
        eval: impl Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync + 'static,
    ) -> Self {
        ClosureField { dim, eval: Arc::new(eval), jac: None, name: name.into() }
    }

    pub fn with_jacobian(
        mut self,
        jac: impl Fn(&DVector<f64>) -> Result<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.jac = Some(Arc::new(jac));
        self
    }
}

impl VectorField for ClosureField {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim, x)?;
        (self.eval)(x)
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        check_dim(self.dim, x)?;
        match &self.jac {
            Some(j) => j(x),
            None => fd_jacobian(|y| (self.eval)(y), x, FD_STEP),
        }
    }
    fn kind(&self) -> FieldKind {
        FieldKind::Procedural { fd_jacobian: self.jac.is_none() }
    }
    fn describe(&self) -> String {
        self.name.clone()
    }
}

pub const FD_STEP: f64 = 1e-6;

/// Central-difference Jacobian with a step scaled to `|x|`.
pub fn fd_jacobian(
    f: impl Fn(&DVector<f64>) -> Result<DVector<f64>>,
    x: &DVector<f64>,
    step: f64,
) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let h = step * (1.0 + x[j].abs());
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        cols.push((f(&xp)? - f(&xm)?) / (2.0 * h));
    }
    let rows = cols.first().map_or(n, |c| c.len());
    let mut out = DMatrix::zeros(rows, n);
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    Ok(out)
}

/// `{f, g}(x) = omega(X_f(x), X_g(x))`.
pub fn poisson(f: &ScalarField, g: &ScalarField, x: &DVector<f64>) -> Result<f64> {
    let xf = hamiltonian_vf(f).eval(x)?;
    let xg = hamiltonian_vf(g).eval(x)?;
    Ok(omega(&xf, &xg))
}

/// Hamiltonian field of the bracket function `{f, g}`, from the exact
/// gradient `H_f J grad g - H_g J grad f`.
pub fn poisson_bracket_field(f: &ScalarField, g: &ScalarField, x: &DVector<f64>) -> Result<DVector<f64>> {
    let (_, gf, hf) = f.jet2(x.as_slice())?;
    let (_, gg, hg) = g.jet2(x.as_slice())?;
    let grad = &hf * apply_j(&gg) - &hg * apply_j(&gf);
    Ok(apply_j(&grad))
}

/// `[X, Y](x) = DY(x) X(x) - DX(x) Y(x)`.
pub fn lie_bracket(x_field: &dyn VectorField, y_field: &dyn VectorField, x: &DVector<f64>) -> Result<DVector<f64>> {
    let (xv, dx) = x_field.eval_with_jacobian(x)?;
    let (yv, dy) = y_field.eval_with_jacobian(x)?;
    Ok(dy * xv - dx * yv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symplectic::structure::j_matrix;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn oscillator_field_rotates() {
        let h = ScalarField::parse("(q1^2+p1^2)/2", 1).unwrap();
        let xh = hamiltonian_vf(&h);
        assert_eq!(xh.eval(&v(&[0.3, -0.7])).unwrap(), v(&[-0.7, -0.3]));
        assert_eq!(xh.jacobian(&v(&[0.3, -0.7])).unwrap(), j_matrix(1));
    }

    #[test]
    fn sign_convention_lock() {
        let q1 = ScalarField::parse("q1", 2).unwrap();
        let xq = hamiltonian_vf(&q1);
        for pt in [[0.0, 0.0, 0.0, 0.0], [1.0, -2.0, 3.0, 0.5]] {
            assert_eq!(xq.eval(&v(&pt)).unwrap(), v(&[0.0, 0.0, -1.0, 0.0]));
        }
    }

    #[test]
    fn canonical_brackets() {
        let q1 = ScalarField::parse("q1", 2).unwrap();
        let q2 = ScalarField::parse("q2", 2).unwrap();
        let p1 = ScalarField::parse("p1", 2).unwrap();
        let x = v(&[0.1, 0.2, 0.3, 0.4]);
        assert_eq!(poisson(&q1, &p1, &x).unwrap(), 1.0);
        assert_eq!(poisson(&q1, &q2, &x).unwrap(), 0.0);
        assert_eq!(poisson(&p1, &p1, &x).unwrap(), 0.0);
    }

    #[test]
    fn lie_bracket_fixtures() {
        let c1 = ConstantField::new(v(&[1.0, 0.0]));
        let c2 = ConstantField::new(v(&[0.0, 2.0]));
        assert_eq!(lie_bracket(&c1, &c2, &v(&[0.5, 0.5])).unwrap(), v(&[0.0, 0.0]));
        let y = LinearField::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(lie_bracket(&c1, &y, &v(&[0.3, 0.9])).unwrap(), v(&[1.0, 0.0]));
    }

    #[test]
    fn closure_field_without_jacobian_is_flagged() {
        let f = ClosureField::new(2, "rot", |x| Ok(v(&[x[1], -x[0]])));
        assert_eq!(f.kind(), FieldKind::Procedural { fd_jacobian: true });
        let j = f.jacobian(&v(&[0.2, 0.1])).unwrap();
        assert!((j - j_matrix(1)).norm() < 1e-9);
    }
}
