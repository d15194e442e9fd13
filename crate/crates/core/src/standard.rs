//! The cotangent-bundle case: characteristic functions of complete
//! solutions for `Pi = (q_1 .. q_s)`, and simple Hamiltonians.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};

use crate::construct::{CompleteSolution, DomainBox};
use crate::error::{Error, Result};
use crate::expr::{BinOp, Expr, ScalarField, Var};
use crate::verify::{ProbeSet, ResidualReport};

const GAUSS_POINTS: usize = 16;
/// Agreement required between successive quadrature levels.
pub const QUADRATURE_TOL: f64 = 1e-10;
const MAX_LEVELS: u32 = 12;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GAUSS_POINTS))
}

/// `int_0^1 g` by 16-point Gauss-Legendre on `2^j` equal segments, doubling
/// `j` until two successive levels agree.
pub fn integrate_unit(g: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let (nodes, weights) = rule();
    let level = |segments: usize| -> Result<f64> {
        let h = 1.0 / segments as f64;
        let mut total = 0.0;
        for s in 0..segments {
            let mid = (s as f64 + 0.5) * h;
            for (x, w) in nodes.iter().zip(weights) {
                total += w * g(mid + 0.5 * h * x)?;
            }
        }
        Ok(0.5 * h * total)
    };
    let mut prev = level(1)?;
    for j in 1..=MAX_LEVELS {
        let next = level(1 << j)?;
        if (next - prev).abs() <= QUADRATURE_TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Integrator(format!("quadrature did not settle after {MAX_LEVELS} bisections")))
}

type GradientFn = dyn Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync;

/// Hamilton's characteristic function `W_lambda` with `W_lambda(q0) = 0`
/// and `dW_lambda = sigma_lambda`, obtained by integrating along segments
/// from `q0`.
#[derive(Clone)]
pub struct CharacteristicFunction {
    lambda: DVector<f64>,
    q0: DVector<f64>,
    gradient: Arc<GradientFn>,
    domain: Option<DomainBox>,
}

impl std::fmt::Debug for CharacteristicFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CharacteristicFunction")
            .field("lambda", &self.lambda.as_slice())
            .field("q0", &self.q0.as_slice())
            .finish()
    }
}

/// Largest allowed `|q-part of Sigma(q, lambda) - q|`.
const PROJECTION_TOL: f64 = 1e-8;

impl CharacteristicFunction {
    /// `W_lambda` for a complete solution whose fibration is the
    /// configuration projection.
    pub fn from_solution(sigma: Arc<CompleteSolution>, lambda: &DVector<f64>, q0: &DVector<f64>) -> Result<Self> {
        let s = sigma.s();
        if sigma.k() != s {
            return Err(Error::Precondition(format!("characteristic functions need k = s, got k = {}", sigma.k())));
        }
        if lambda.len() != s || q0.len() != s {
            return Err(Error::DimensionMismatch { expected: s, got: lambda.len().max(q0.len()) });
        }
        let dom = sigma.domain();
        let n_box = DomainBox { center: dom.center[..s].to_vec(), half_widths: dom.half_widths[..s].to_vec() };
        let l_box = DomainBox { center: dom.center[s..].to_vec(), half_widths: dom.half_widths[s..].to_vec() };
        if !n_box.contains(q0) || !l_box.contains(lambda) {
            return Err(Error::OutsideChartDomain);
        }
        let lam = lambda.clone();
        let gradient = move |q: &DVector<f64>| -> Result<DVector<f64>> {
            let mut z = DVector::zeros(2 * s);
            z.rows_mut(0, s).copy_from(q);
            z.rows_mut(s, s).copy_from(&lam);
            let x = sigma.eval(&z)?;
            if (x.rows(0, s) - q).amax() > PROJECTION_TOL {
                return Err(Error::Precondition("fibration is not the configuration projection".into()));
            }
            Ok(x.rows(s, s).into_owned())
        };
        let w = CharacteristicFunction {
            lambda: lambda.clone(),
            q0: q0.clone(),
            gradient: Arc::new(gradient),
            domain: Some(n_box),
        };
        w.gradient(q0)?;
        Ok(w)
    }

    /// `W` from an arbitrary covector field `sigma(q)`; `domain` bounds the
    /// admissible `q` when given.
    pub fn from_gradient(
        gradient: impl Fn(&DVector<f64>) -> Result<DVector<f64>> + Send + Sync + 'static,
        lambda: &DVector<f64>,
        q0: &DVector<f64>,
        domain: Option<DomainBox>,
    ) -> Self {
        CharacteristicFunction { lambda: lambda.clone(), q0: q0.clone(), gradient: Arc::new(gradient), domain }
    }

    /// The same construction with `sigma` multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let g = self.gradient.clone();
        CharacteristicFunction { gradient: Arc::new(move |q: &DVector<f64>| Ok(g(q)? * factor)), ..self.clone() }
    }

    pub fn lambda(&self) -> &DVector<f64> {
        &self.lambda
    }

    pub fn q0(&self) -> &DVector<f64> {
        &self.q0
    }

    pub fn domain(&self) -> Option<&DomainBox> {
        self.domain.as_ref()
    }

    fn check(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.q0.len() {
            return Err(Error::DimensionMismatch { expected: self.q0.len(), got: q.len() });
        }
        match &self.domain {
            Some(d) if !d.contains(q) => Err(Error::OutsideChartDomain),
            _ => Ok(()),
        }
    }

    /// `sigma_lambda(q)`.
    pub fn gradient(&self, q: &DVector<f64>) -> Result<DVector<f64>> {
        self.check(q)?;
        (self.gradient)(q)
    }

    /// `W_lambda(q) = int_0^1 <sigma_lambda(q0 + t (q - q0)), q - q0> dt`.
    pub fn eval(&self, q: &DVector<f64>) -> Result<f64> {
        self.check(q)?;
        let d = q - &self.q0;
        if d.amax() == 0.0 {
            return Ok(0.0);
        }
        integrate_unit(|t| Ok((self.gradient)(&(&self.q0 + &d * t))?.dot(&d)))
    }
}

/// `|H(q, sigma_lambda(q)) - H(q0, sigma_lambda(q0))|` over probes in `q`.
pub fn verify_characteristic(
    w: &CharacteristicFunction,
    h: &ScalarField,
    probes: &ProbeSet,
    tolerance: f64,
) -> Result<ResidualReport> {
    let energy = |q: &DVector<f64>| -> Result<f64> {
        let p = w.gradient(q)?;
        let x: Vec<f64> = q.iter().chain(p.iter()).copied().collect();
        h.eval(&x)
    };
    let e0 = energy(w.q0())?;
    let residuals = probes.points.iter().map(|q| Ok((energy(q)? - e0).abs())).collect::<Result<Vec<_>>>()?;
    Ok(ResidualReport::from_residuals("characteristic_energy", tolerance, probes, &residuals))
}

/// Central-difference gradient of `W` against `sigma_lambda`.
pub fn gradient_consistency(w: &CharacteristicFunction, probes: &ProbeSet, tolerance: f64) -> Result<ResidualReport> {
    const STEP: f64 = 1e-5;
    let mut residuals = Vec::with_capacity(probes.len());
    for q in &probes.points {
        let sigma = w.gradient(q)?;
        let mut worst = 0.0_f64;
        for i in 0..q.len() {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += STEP;
            qm[i] -= STEP;
            let fd = (w.eval(&qp)? - w.eval(&qm)?) / (2.0 * STEP);
            worst = worst.max((fd - sigma[i]).abs());
        }
        residuals.push(worst);
    }
    Ok(ResidualReport::from_residuals("characteristic_gradient", tolerance, probes, &residuals))
}

/// `H = 1/2 p^T G(q) p + h(q)` with a symmetric cometric `G`.
#[derive(Debug, Clone)]
pub struct SimpleHamiltonian {
    s: usize,
    cometric: Vec<Vec<ScalarField>>,
    potential: ScalarField,
    hamiltonian: ScalarField,
}

impl SimpleHamiltonian {
    pub fn new<S: AsRef<str>>(cometric: &[Vec<S>], potential: &str, s: usize) -> Result<Self> {
        if cometric.len() != s || cometric.iter().any(|row| row.len() != s) {
            return Err(Error::Config(format!("cometric must be {s} x {s}")));
        }
        let g = cometric
            .iter()
            .map(|row| row.iter().map(|e| ScalarField::parse(e.as_ref(), s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let potential = ScalarField::parse(potential, s)?;
        for i in 0..s {
            for j in 0..s {
                if g[i][j].ast().uses_momenta() {
                    return Err(Error::Config(format!("cometric entry ({}, {}) depends on momenta", i + 1, j + 1)));
                }
                if g[i][j].serialize() != g[j][i].serialize() {
                    return Err(Error::Config(format!("cometric is not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        if potential.ast().uses_momenta() {
            return Err(Error::Config("potential depends on momenta".into()));
        }
        let mut kinetic: Option<Expr> = None;
        for i in 0..s {
            for j in 0..s {
                let term = Expr::binary(
                    BinOp::Mul,
                    Expr::binary(BinOp::Mul, g[i][j].ast().clone(), Expr::var(Var::P(i + 1))),
                    Expr::var(Var::P(j + 1)),
                );
                kinetic = Some(match kinetic {
                    None => term,
                    Some(acc) => Expr::binary(BinOp::Add, acc, term),
                });
            }
        }
        let half = Expr::binary(BinOp::Mul, Expr::num(0.5), kinetic.expect("s >= 1"));
        let hamiltonian = ScalarField::from_expr(Expr::binary(BinOp::Add, half, potential.ast().clone()), s)?;
        Ok(SimpleHamiltonian { s, cometric: g, potential, hamiltonian })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn hamiltonian(&self) -> &ScalarField {
        &self.hamiltonian
    }

    pub fn potential(&self) -> &ScalarField {
        &self.potential
    }

    /// `G(q)` at a phase-space point.
    pub fn cometric_at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.s, self.s);
        for i in 0..self.s {
            for j in 0..self.s {
                out[(i, j)] = self.cometric[i][j].eval(x.as_slice())?;
            }
        }
        Ok(out)
    }

    /// Configuration components of `X_H(m)`, which equal `G(q) p`.
    pub fn projection_test(&self, m: &DVector<f64>) -> Result<DVector<f64>> {
        let grad = self.hamiltonian.grad(m.as_slice())?;
        Ok(grad.rows(self.s, self.s).into_owned())
    }

    /// Smallest eigenvalue of `G(q)` over the probes.
    pub fn min_cometric_eigenvalue(&self, probes: &ProbeSet) -> Result<f64> {
        let mut min = f64::INFINITY;
        for x in &probes.points {
            let g = self.cometric_at(x)?;
            min = min.min(g.symmetric_eigenvalues().min());
        }
        Ok(min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::MapField;

    fn v(xs: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(xs)
    }

    #[test]
    fn gauss_legendre_is_exact_for_degree_31() {
        let (x, w) = gauss_legendre(16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        let exact = 2.0 / 31.0;
        let approx: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((approx - exact).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn quadrature_of_smooth_function() {
        let val = integrate_unit(|t| Ok((3.0 * t).exp())).unwrap();
        assert!((val - ((3.0_f64).exp() - 1.0) / 3.0).abs() < 1e-13);
    }

    #[test]
    fn free_particle_characteristic_function_is_linear() {
        let map = MapField::from_exprs(&["q1", "p1"], 1).unwrap();
        let sigma = CompleteSolution::analytic(map, 1, DomainBox::new(&v(&[0.0, 1.0]), &v(&[1.0, 0.5]))).unwrap();
        let w = CharacteristicFunction::from_solution(Arc::new(sigma), &v(&[1.2]), &v(&[-0.5])).unwrap();
        for q in [-0.9, 0.0, 0.3, 1.0] {
            assert!((w.eval(&v(&[q])).unwrap() - 1.2 * (q + 0.5)).abs() < 1e-12);
        }
        assert!(w.eval(&v(&[1.5])).is_err());
    }

    #[test]
    fn harmonic_fixture_energy_and_gradient() {
        let h = ScalarField::parse("(q1^2+p1^2)/2", 1).unwrap();
        let lambda = 2.0_f64;
        let edge = (2.0 * lambda).sqrt() - 0.1;
        let dom = DomainBox::new(&v(&[0.0]), &v(&[edge]));
        let w = CharacteristicFunction::from_gradient(
            move |q: &DVector<f64>| Ok(v(&[(2.0 * lambda - q[0] * q[0]).sqrt()])),
            &v(&[lambda]),
            &v(&[0.0]),
            Some(dom.clone()),
        );
        let probes = ProbeSet::in_box(&dom.scaled(0.99), 50, 3);
        assert!(verify_characteristic(&w, &h, &probes, 1e-7).unwrap().passed);
        assert!(gradient_consistency(&w, &probes, 1e-8).unwrap().passed);
        let bad = verify_characteristic(&w.scaled(1.01), &h, &probes, 1e-3).unwrap();
        assert!(!bad.passed && bad.max_residual > 1e-3);
    }

    #[test]
    fn simple_hamiltonian_projection() {
        let sh = SimpleHamiltonian::new(&[vec!["1", "0"], vec!["0", "1/q1^2"]], "0", 2).unwrap();
        let m = v(&[2.0, 0.5, 0.3, 0.8]);
        let proj = sh.projection_test(&m).unwrap();
        assert!((proj - v(&[0.3, 0.8 / 4.0])).amax() < 1e-15);
        assert_eq!(sh.projection_test(&v(&[2.0, 0.5, 0.0, 0.0])).unwrap().amax(), 0.0);
        let flat = SimpleHamiltonian::new(&[vec!["1", "0"], vec!["0", "1"]], "0", 2).unwrap();
        let x = [0.1, 0.2, 0.3, 0.4];
        assert!((flat.hamiltonian().eval(&x).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn asymmetric_cometric_rejected() {
        let err = SimpleHamiltonian::new(&[vec!["1", "q1"], vec!["0", "1"]], "0", 2).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        assert!(SimpleHamiltonian::new(&[vec!["p1"]], "0", 1).is_err());
    }
}
