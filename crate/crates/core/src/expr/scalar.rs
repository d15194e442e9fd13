//! Number types the expression evaluator is generic over: plain `f64`,
//! first-order [`Dual`] numbers, and second-order [`Jet2`] numbers that
//! carry a full Hessian.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Arithmetic the evaluator needs. Unary functions are expressed through
/// [`Scalar::chain`], which applies the chain rule given the outer
/// function's value and first two derivatives at `self.value()`.
pub trait Scalar: Clone {
    fn constant(v: f64, n: usize) -> Self;
    fn variable(v: f64, index: usize, n: usize) -> Self;
    fn value(&self) -> f64;
    /// True when any derivative component is nonzero.
    fn has_tangent(&self) -> bool;
    fn all_finite(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self;
}

impl Scalar for f64 {
    fn constant(v: f64, _n: usize) -> Self {
        v
    }
    fn variable(v: f64, _index: usize, _n: usize) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn has_tangent(&self) -> bool {
        false
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn chain(&self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }
}

/// First-order forward-mode dual number over `n` tangent directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub derivs: Vec<f64>,
}

impl Dual {
    pub fn new(value: f64, derivs: Vec<f64>) -> Self {
        Dual { value, derivs }
    }

    pub fn constant(value: f64, n: usize) -> Self {
        Dual { value, derivs: vec![0.0; n] }
    }

    pub fn variable(value: f64, index: usize, n: usize) -> Self {
        let mut derivs = vec![0.0; n];
        derivs[index] = 1.0;
        Dual { value, derivs }
    }

    fn zip(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        self.derivs.iter().zip(&other.derivs).map(|(a, b)| f(*a, *b)).collect()
    }

    pub fn sin(&self) -> Self {
        Scalar::chain(self, self.value.sin(), self.value.cos(), 0.0)
    }

    pub fn cos(&self) -> Self {
        Scalar::chain(self, self.value.cos(), -self.value.sin(), 0.0)
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        Scalar::chain(self, e, e, 0.0)
    }

    pub fn ln(&self) -> Self {
        Scalar::chain(self, self.value.ln(), 1.0 / self.value, 0.0)
    }

    pub fn sqrt(&self) -> Self {
        let r = self.value.sqrt();
        Scalar::chain(self, r, 0.5 / r, 0.0)
    }

    pub fn powi(&self, n: i32) -> Self {
        let d = if n == 0 { 0.0 } else { n as f64 * self.value.powi(n - 1) };
        Scalar::chain(self, self.value.powi(n), d, 0.0)
    }
}

impl Scalar for Dual {
    fn constant(v: f64, n: usize) -> Self {
        Dual::constant(v, n)
    }
    fn variable(v: f64, index: usize, n: usize) -> Self {
        Dual::variable(v, index, n)
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn has_tangent(&self) -> bool {
        self.derivs.iter().any(|d| *d != 0.0)
    }
    fn all_finite(&self) -> bool {
        self.value.is_finite() && self.derivs.iter().all(|d| d.is_finite())
    }
    fn add(&self, o: &Self) -> Self {
        Dual { value: self.value + o.value, derivs: self.zip(o, |a, b| a + b) }
    }
    fn sub(&self, o: &Self) -> Self {
        Dual { value: self.value - o.value, derivs: self.zip(o, |a, b| a - b) }
    }
    fn mul(&self, o: &Self) -> Self {
        let (u, v) = (self.value, o.value);
        Dual { value: u * v, derivs: self.zip(o, |a, b| a * v + u * b) }
    }
    fn neg(&self) -> Self {
        Dual { value: -self.value, derivs: self.derivs.iter().map(|d| -d).collect() }
    }
    fn chain(&self, f0: f64, f1: f64, _f2: f64) -> Self {
        Dual { value: f0, derivs: self.derivs.iter().map(|d| f1 * d).collect() }
    }
}

impl Add for &Dual {
    type Output = Dual;
    fn add(self, rhs: &Dual) -> Dual {
        Scalar::add(self, rhs)
    }
}

impl Sub for &Dual {
    type Output = Dual;
    fn sub(self, rhs: &Dual) -> Dual {
        Scalar::sub(self, rhs)
    }
}

impl Mul for &Dual {
    type Output = Dual;
    fn mul(self, rhs: &Dual) -> Dual {
        Scalar::mul(self, rhs)
    }
}

impl Div for &Dual {
    type Output = Dual;
    fn div(self, rhs: &Dual) -> Dual {
        let v = rhs.value;
        let recip = Scalar::chain(rhs, 1.0 / v, -1.0 / (v * v), 0.0);
        Scalar::mul(self, &recip)
    }
}

impl Neg for &Dual {
    type Output = Dual;
    fn neg(self) -> Dual {
        Scalar::neg(self)
    }
}

/// Second-order jet: value, gradient and dense Hessian (row-major `n x n`).
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl Jet2 {
    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn hess_at(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }
}

impl Scalar for Jet2 {
    fn constant(v: f64, n: usize) -> Self {
        Jet2 { value: v, grad: vec![0.0; n], hess: vec![0.0; n * n] }
    }
    fn variable(v: f64, index: usize, n: usize) -> Self {
        let mut j = Jet2::constant(v, n);
        j.grad[index] = 1.0;
        j
    }
    fn value(&self) -> f64 {
        self.value
    }
    fn has_tangent(&self) -> bool {
        self.grad.iter().any(|d| *d != 0.0) || self.hess.iter().any(|d| *d != 0.0)
    }
    fn all_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().all(|d| d.is_finite()) && self.hess.iter().all(|d| d.is_finite())
    }
    fn add(&self, o: &Self) -> Self {
        Jet2 {
            value: self.value + o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a + b).collect(),
            hess: self.hess.iter().zip(&o.hess).map(|(a, b)| a + b).collect(),
        }
    }
    fn sub(&self, o: &Self) -> Self {
        Jet2 {
            value: self.value - o.value,
            grad: self.grad.iter().zip(&o.grad).map(|(a, b)| a - b).collect(),
            hess: self.hess.iter().zip(&o.hess).map(|(a, b)| a - b).collect(),
        }
    }
    fn mul(&self, o: &Self) -> Self {
        let n = self.dim();
        let (u, v) = (self.value, o.value);
        let grad = self.grad.iter().zip(&o.grad).map(|(a, b)| a * v + u * b).collect();
        let mut hess = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let k = i * n + j;
                hess.push(self.hess[k] * v + u * o.hess[k] + self.grad[i] * o.grad[j] + o.grad[i] * self.grad[j]);
            }
        }
        Jet2 { value: u * v, grad, hess }
    }
    fn neg(&self) -> Self {
        Jet2 {
            value: -self.value,
            grad: self.grad.iter().map(|d| -d).collect(),
            hess: self.hess.iter().map(|d| -d).collect(),
        }
    }
    fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let n = self.dim();
        let grad = self.grad.iter().map(|d| f1 * d).collect();
        let mut hess = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                hess.push(f1 * self.hess[i * n + j] + f2 * self.grad[i] * self.grad[j]);
            }
        }
        Jet2 { value: f0, grad, hess }
    }
}
