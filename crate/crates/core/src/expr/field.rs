use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::ast::{BinOp, Expr, Func};
use super::parser::parse_expr;
use super::scalar::{Dual, Jet2, Scalar};
use crate::error::{Error, Result};

/// A parsed, differentiable real-valued function on `R^{2s}` with
/// coordinates ordered `(q1..qs, p1..ps)`.
///
/// Immutable after construction; evaluation is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    source: String,
    ast: Expr,
    s: usize,
}

impl ScalarField {
    pub fn parse(source: &str, s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::Config("dimension s must be positive".into()));
        }
        let ast = parse_expr(source, s)?;
        Ok(ScalarField { source: source.to_string(), ast, s })
    }

    /// Wraps an already-built tree; its serialization becomes the source.
    pub fn from_expr(ast: Expr, s: usize) -> Result<Self> {
        if s == 0 {
            return Err(Error::Config("dimension s must be positive".into()));
        }
        if ast.max_var_index() > s {
            return Err(Error::VariableOutOfRange { name: format!("index {}", ast.max_var_index()), s });
        }
        Ok(ScalarField { source: ast.to_string(), ast, s })
    }

    pub fn constant(v: f64, s: usize) -> Self {
        ScalarField::from_expr(Expr::num(v), s).expect("constant fits any dimension")
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    pub fn s(&self) -> usize {
        self.s
    }

    /// Phase-space dimension `2s`.
    pub fn dim(&self) -> usize {
        2 * self.s
    }

    pub fn serialize(&self) -> String {
        self.ast.to_string()
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if let Some(v) = x.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain { subexpr: self.source.clone(), reason: format!("non-finite input {v}") });
        }
        Ok(())
    }

    pub fn eval_generic<S: Scalar>(&self, x: &[f64]) -> Result<S> {
        self.check_point(x)?;
        eval_node(&self.ast, x, self.s)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_generic::<f64>(x)
    }

    pub fn eval_dual(&self, x: &[f64]) -> Result<Dual> {
        self.eval_generic::<Dual>(x)
    }

    /// Exact gradient by one forward-mode pass.
    pub fn grad(&self, x: &[f64]) -> Result<DVector<f64>> {
        Ok(DVector::from_vec(self.eval_dual(x)?.derivs))
    }

    /// Value, gradient and Hessian in one second-order pass.
    pub fn jet2(&self, x: &[f64]) -> Result<(f64, DVector<f64>, DMatrix<f64>)> {
        let j: Jet2 = self.eval_generic(x)?;
        let n = self.dim();
        Ok((j.value, DVector::from_vec(j.grad), DMatrix::from_row_slice(n, n, &j.hess)))
    }
}

fn is_constant(e: &Expr) -> bool {
    e.max_var_index() == 0
}

fn domain(e: &Expr, reason: &str) -> Error {
    Error::Domain { subexpr: e.to_string(), reason: reason.to_string() }
}

fn finite<S: Scalar>(e: &Expr, v: S) -> Result<S> {
    if v.all_finite() {
        Ok(v)
    } else {
        Err(domain(e, "non-finite intermediate value"))
    }
}

fn eval_node<S: Scalar>(e: &Expr, x: &[f64], s: usize) -> Result<S> {
    let n = 2 * s;
    let out = match e {
        Expr::Num(v) => S::constant(*v, n),
        Expr::Var(v) => {
            let i = v.flat_index(s);
            S::variable(x[i], i, n)
        }
        Expr::Neg(a) => eval_node::<S>(a, x, s)?.neg(),
        Expr::Call(func, a) => {
            let a = eval_node::<S>(a, x, s)?;
            let v = a.value();
            match func {
                Func::Sin => a.chain(v.sin(), v.cos(), -v.sin()),
                Func::Cos => a.chain(v.cos(), -v.sin(), -v.cos()),
                Func::Exp => {
                    let ev = v.exp();
                    a.chain(ev, ev, ev)
                }
                Func::Log => {
                    if v <= 0.0 {
                        return Err(domain(e, "logarithm of a non-positive value"));
                    }
                    a.chain(v.ln(), 1.0 / v, -1.0 / (v * v))
                }
                Func::Sqrt => {
                    if v < 0.0 {
                        return Err(domain(e, "square root of a negative value"));
                    }
                    let r = v.sqrt();
                    a.chain(r, 0.5 / r, -0.25 / (r * v))
                }
            }
        }
        Expr::Binary(op, a, b) => {
            let lhs = eval_node::<S>(a, x, s)?;
            let rhs = eval_node::<S>(b, x, s)?;
            match op {
                BinOp::Add => lhs.add(&rhs),
                BinOp::Sub => lhs.sub(&rhs),
                BinOp::Mul => lhs.mul(&rhs),
                BinOp::Div => {
                    let v = rhs.value();
                    if v == 0.0 {
                        return Err(domain(e, "division by zero"));
                    }
                    let recip = rhs.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v));
                    lhs.mul(&recip)
                }
                BinOp::Pow => power(e, &lhs, &rhs, is_constant(b))?,
            }
        }
    };
    finite(e, out)
}

fn power<S: Scalar>(e: &Expr, base: &S, exponent: &S, constant_exponent: bool) -> Result<S> {
    let v = base.value();
    if constant_exponent {
        let c = exponent.value();
        if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
            let k = c as i32;
            if v == 0.0 && k < 0 {
                return Err(domain(e, "zero raised to a negative power"));
            }
            let f1 = if k == 0 { 0.0 } else { c * v.powi(k - 1) };
            let f2 = if k == 0 || k == 1 { 0.0 } else { c * (c - 1.0) * v.powi(k - 2) };
            return Ok(base.chain(v.powi(k), f1, f2));
        }
        if v < 0.0 {
            return Err(domain(e, "negative base with non-integer exponent"));
        }
        if v == 0.0 && c < 0.0 {
            return Err(domain(e, "zero raised to a negative power"));
        }
        let f1 = if v == 0.0 && c >= 2.0 { 0.0 } else { c * v.powf(c - 1.0) };
        let f2 = if v == 0.0 && c >= 3.0 { 0.0 } else { c * (c - 1.0) * v.powf(c - 2.0) };
        return Ok(base.chain(v.powf(c), f1, f2));
    }
    if v <= 0.0 {
        return Err(domain(e, "non-positive base with variable exponent"));
    }
    // b^e = exp(e ln b)
    let ln_b = base.chain(v.ln(), 1.0 / v, -1.0 / (v * v));
    let prod = exponent.mul(&ln_b);
    let pv = prod.value().exp();
    Ok(prod.chain(pv, pv, pv))
}

/// A map evaluated procedurally (Newton solves, flows), supplying its
/// Jacobian together with its value.
pub trait ProceduralMap: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn eval_with_jacobian(&self, x: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)>;
    fn eval(&self, x: &[f64]) -> Result<DVector<f64>> {
        Ok(self.eval_with_jacobian(x)?.0)
    }
    fn describe(&self) -> String {
        "procedural".to_string()
    }
}

#[derive(Clone)]
pub enum MapBlock {
    Scalar(ScalarField),
    Procedural(Arc<dyn ProceduralMap>),
}

impl MapBlock {
    fn len(&self) -> usize {
        match self {
            MapBlock::Scalar(_) => 1,
            MapBlock::Procedural(p) => p.output_dim(),
        }
    }
}

impl fmt::Debug for MapBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapBlock::Scalar(sf) => write!(f, "Scalar({})", sf.source()),
            MapBlock::Procedural(p) => write!(f, "Procedural({}, dim {})", p.describe(), p.output_dim()),
        }
    }
}

/// A tuple of component functions on `R^{2s}` (fibrations, first
/// integrals, stacked maps).
#[derive(Debug, Clone)]
pub struct MapField {
    s: usize,
    blocks: Vec<MapBlock>,
}

impl MapField {
    pub fn from_exprs<S: AsRef<str>>(sources: &[S], s: usize) -> Result<Self> {
        let comps = sources.iter().map(|src| ScalarField::parse(src.as_ref(), s)).collect::<Result<Vec<_>>>()?;
        Ok(MapField::from_scalars(comps, s))
    }

    pub fn from_scalars(components: Vec<ScalarField>, s: usize) -> Self {
        assert!(components.iter().all(|c| c.s() == s), "components must share s");
        MapField { s, blocks: components.into_iter().map(MapBlock::Scalar).collect() }
    }

    pub fn procedural(map: Arc<dyn ProceduralMap>) -> Self {
        assert_eq!(map.input_dim() % 2, 0, "phase space is even-dimensional");
        MapField { s: map.input_dim() / 2, blocks: vec![MapBlock::Procedural(map)] }
    }

    /// Concatenation `(self, other)`.
    pub fn stack(&self, other: &MapField) -> Result<MapField> {
        if self.s != other.s {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        let mut blocks = self.blocks.clone();
        blocks.extend(other.blocks.iter().cloned());
        Ok(MapField { s: self.s, blocks })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn dim(&self) -> usize {
        2 * self.s
    }

    pub fn target_dim(&self) -> usize {
        self.blocks.iter().map(MapBlock::len).sum()
    }

    pub fn blocks(&self) -> &[MapBlock] {
        &self.blocks
    }

    /// Component expressions, when every block is a parsed scalar field.
    pub fn scalar_components(&self) -> Option<Vec<&ScalarField>> {
        self.blocks
            .iter()
            .map(|b| match b {
                MapBlock::Scalar(sf) => Some(sf),
                MapBlock::Procedural(_) => None,
            })
            .collect()
    }

    pub fn is_procedural(&self) -> bool {
        self.blocks.iter().any(|b| matches!(b, MapBlock::Procedural(_)))
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(())
    }

    pub fn eval(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check(x)?;
        let mut out = Vec::with_capacity(self.target_dim());
        for b in &self.blocks {
            match b {
                MapBlock::Scalar(sf) => out.push(sf.eval(x)?),
                MapBlock::Procedural(p) => out.extend(p.eval(x)?.iter()),
            }
        }
        Ok(DVector::from_vec(out))
    }

    /// Value and Jacobian (`target_dim x 2s`).
    pub fn eval_with_jacobian(&self, x: &[f64]) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.check(x)?;
        let n = self.dim();
        let mut vals = Vec::with_capacity(self.target_dim());
        let mut jac = DMatrix::zeros(self.target_dim(), n);
        let mut row = 0;
        for b in &self.blocks {
            match b {
                MapBlock::Scalar(sf) => {
                    let d = sf.eval_dual(x)?;
                    vals.push(d.value);
                    for (j, v) in d.derivs.iter().enumerate() {
                        jac[(row, j)] = *v;
                    }
                    row += 1;
                }
                MapBlock::Procedural(p) => {
                    let (v, jp) = p.eval_with_jacobian(x)?;
                    vals.extend(v.iter());
                    jac.view_mut((row, 0), (jp.nrows(), n)).copy_from(&jp);
                    row += jp.nrows();
                }
            }
        }
        Ok((DVector::from_vec(vals), jac))
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.eval_with_jacobian(x)?.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evaluates_fixtures() {
        let f = ScalarField::parse("(q1^2 + p1^2)/2", 1).unwrap();
        assert_eq!(f.eval(&[1.0, 1.0]).unwrap(), 1.0);
        let f = ScalarField::parse("q1*p1", 1).unwrap();
        assert_eq!(f.eval(&[2.0, 3.0]).unwrap(), 6.0);
        assert_eq!(f.grad(&[2.0, 3.0]).unwrap().as_slice(), &[3.0, 2.0]);
        let f = ScalarField::parse("sin(q1)", 1).unwrap();
        assert_eq!(f.eval(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let f = ScalarField::parse("1 + log(q1)", 1).unwrap();
        match f.eval(&[-1.0, 0.0]) {
            Err(Error::Domain { subexpr, .. }) => assert_eq!(subexpr, "log(q1)"),
            other => panic!("unexpected {other:?}"),
        }
        let f = ScalarField::parse("sqrt(q1 - 1)", 1).unwrap();
        assert!(matches!(f.eval(&[0.0, 0.0]), Err(Error::Domain { .. })));
        let f = ScalarField::parse("p1 / q1", 1).unwrap();
        assert!(matches!(f.eval(&[0.0, 1.0]), Err(Error::Domain { .. })));
        let f = ScalarField::parse("exp(q1)", 1).unwrap();
        assert!(matches!(f.eval(&[1000.0, 0.0]), Err(Error::Domain { .. })));
    }

    #[test]
    fn constant_has_zero_gradient() {
        let f = ScalarField::parse("5", 2).unwrap();
        assert_eq!(f.grad(&[0.3, -1.0, 2.0, 7.0]).unwrap(), DVector::zeros(4));
    }

    #[test]
    fn negative_base_integer_power() {
        let f = ScalarField::parse("q1^3", 1).unwrap();
        assert_eq!(f.eval(&[-2.0, 0.0]).unwrap(), -8.0);
        assert_eq!(f.grad(&[-2.0, 0.0]).unwrap()[0], 12.0);
        let f = ScalarField::parse("q1^0.5", 1).unwrap();
        assert!(f.eval(&[-2.0, 0.0]).is_err());
        let f = ScalarField::parse("q1^p1", 1).unwrap();
        assert!(f.eval(&[-2.0, 2.0]).is_err());
    }

    #[test]
    fn jacobian_of_map() {
        let m = MapField::from_exprs(&["q1*p2", "q2"], 2).unwrap();
        let j = m.jacobian(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(j, DMatrix::from_row_slice(2, 4, &[4.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]));
        let m = MapField::from_exprs(&["p1"], 1).unwrap();
        assert_eq!(m.jacobian(&[0.4, 9.0]).unwrap(), DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));
    }

    #[test]
    fn hessian_of_variable_power() {
        // f = q1^p1 at (2, 3): f_qq = p(p-1) q^(p-2) = 6*2 = 12
        let f = ScalarField::parse("q1^p1", 1).unwrap();
        let (v, g, h) = f.jet2(&[2.0, 3.0]).unwrap();
        assert!((v - 8.0).abs() < 1e-12);
        assert!((g[0] - 12.0).abs() < 1e-12);
        assert!((g[1] - 8.0 * 2f64.ln()).abs() < 1e-12);
        assert!((h[(0, 0)] - 12.0).abs() < 1e-11);
        assert!((h[(0, 1)] - h[(1, 0)]).abs() < 1e-12);
    }
}
