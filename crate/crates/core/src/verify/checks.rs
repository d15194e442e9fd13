use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::report::{ProbeSet, ResidualReport};
use crate::construct::CompleteSolution;
use crate::error::{Error, Result};
use crate::expr::{MapBlock, MapField, ScalarField};
use crate::linalg;
use crate::symplectic::{
    apply_j, apply_j_cols, fd_jacobian, hamiltonian_vf, lie_bracket, ClosureField, SharedField, Subspace, VectorField,
};

pub const RESIDUAL_TOL: f64 = 1e-5;
pub const FIRST_INTEGRAL_TOL: f64 = 1e-6;
pub const FROBENIUS_TOL: f64 = 1e-4;
const GRADIENT_FD_STEP: f64 = 1e-5;

/// Residual of the generalized HJE at each probe `(n, lambda)`:
/// `i_{X} Sigma^* omega - Sigma^* dH` with `X = (Pi_* X_H o Sigma, 0)`,
/// together with `|Pi(Sigma(n, lambda)) - n|`.
pub fn hje_residual(
    sigma: &CompleteSolution,
    h: &ScalarField,
    pi: &MapField,
    probes: &ProbeSet,
    tolerance: f64,
) -> Result<ResidualReport> {
    let k = sigma.k();
    let xh = hamiltonian_vf(h);
    let mut residuals = Vec::with_capacity(probes.len());
    for z in &probes.points {
        let (x, js) = sigma.eval_with_jacobian(z)?;
        let (pix, dpi) = pi.eval_with_jacobian(x.as_slice())?;
        let mut lifted = DVector::zeros(z.len());
        lifted.rows_mut(0, k).copy_from(&(&dpi * xh.eval(&x)?));
        let pushed = &js * lifted;
        // omega(Sigma_* X, Sigma_* e_j) against dH(Sigma_* e_j)
        let lhs = js.transpose() * apply_j(&pushed) * -1.0;
        let rhs = js.transpose() * h.grad(x.as_slice())?;
        let projection = (pix - z.rows(0, k)).amax();
        residuals.push((lhs - rhs).amax().max(projection));
    }
    Ok(ResidualReport::from_residuals("hje", tolerance, probes, &residuals))
}

/// `|(Pi, F)(Sigma(z)) - z|` over probes `z = (n, lambda)`.
pub fn sigma_roundtrip(
    sigma: &CompleteSolution,
    stacked: &MapField,
    probes: &ProbeSet,
    tolerance: f64,
) -> Result<ResidualReport> {
    let mut residuals = Vec::with_capacity(probes.len());
    for z in &probes.points {
        let x = sigma.eval(z)?;
        residuals.push((stacked.eval(x.as_slice())? - z).amax());
    }
    Ok(ResidualReport::from_residuals("sigma_then_pi_f", tolerance, probes, &residuals))
}

/// `|Sigma((Pi, F)(x)) - x|` over phase-space probes.
pub fn stacked_roundtrip(
    sigma: &CompleteSolution,
    stacked: &MapField,
    probes: &ProbeSet,
    tolerance: f64,
) -> Result<ResidualReport> {
    let mut residuals = Vec::with_capacity(probes.len());
    for x in &probes.points {
        let z = stacked.eval(x.as_slice())?;
        residuals.push((sigma.eval(&z)? - x).amax());
    }
    Ok(ResidualReport::from_residuals("pi_f_then_sigma", tolerance, probes, &residuals))
}

/// `max |omega(dSigma/dn_i, dSigma/dn_j)|`.
pub fn isotropy_residual(sigma: &CompleteSolution, probes: &ProbeSet, tolerance: f64) -> Result<ResidualReport> {
    let k = sigma.k();
    let mut residuals = Vec::with_capacity(probes.len());
    for z in &probes.points {
        let (_, js) = sigma.eval_with_jacobian(z)?;
        let cols = js.columns(0, k).into_owned();
        let gram = cols.transpose() * apply_j_cols(&cols);
        residuals.push(gram.amax());
    }
    Ok(ResidualReport::from_residuals("isotropy", tolerance, probes, &residuals))
}

/// `max |F_*(x) X_H(x)|`.
pub fn first_integral_residual(
    f: &MapField,
    h: &ScalarField,
    probes: &ProbeSet,
    tolerance: f64,
) -> Result<ResidualReport> {
    let xh = hamiltonian_vf(h);
    let mut residuals = Vec::with_capacity(probes.len());
    for x in &probes.points {
        let df = f.jacobian(x.as_slice())?;
        residuals.push((df * xh.eval(x)?).amax());
    }
    Ok(ResidualReport::from_residuals("first_integral", tolerance, probes, &residuals))
}

fn kernel_of(f: &MapField, x: &DVector<f64>, rank_tol: f64) -> Result<DMatrix<f64>> {
    let df = f.jacobian(x.as_slice())?;
    let rank = linalg::rank(&df, rank_tol);
    if rank != f.target_dim() {
        return Err(Error::Hypothesis {
            which: "submersion".into(),
            detail: format!("map has rank {rank} < {} at {:?}", f.target_dim(), x.as_slice()),
        });
    }
    Ok(linalg::null_space(&df, rank_tol))
}

/// `2s - rank [Ker Pi_* | Ker F_*]`, which vanishes exactly when the two
/// kernels are complementary.
pub fn transversality_check(pi: &MapField, f: &MapField, probes: &ProbeSet, rank_tol: f64) -> Result<ResidualReport> {
    let mut residuals = Vec::with_capacity(probes.len());
    for x in &probes.points {
        let kp = kernel_of(pi, x, rank_tol)?;
        let kf = kernel_of(f, x, rank_tol)?;
        let rank = linalg::rank(&linalg::hstack(&[&kp, &kf]), rank_tol);
        residuals.push((x.len() - rank) as f64 + (kp.ncols() + kf.ncols()).abs_diff(x.len()) as f64);
    }
    Ok(ResidualReport::from_residuals("transversality", 0.0, probes, &residuals))
}

/// Largest entry of the omega-Gram matrix of an orthonormal `Ker F_*` basis.
pub fn kernel_isotropy_check(f: &MapField, probes: &ProbeSet, rank_tol: f64, tolerance: f64) -> Result<ResidualReport> {
    let mut residuals = Vec::with_capacity(probes.len());
    for x in &probes.points {
        let kf = kernel_of(f, x, rank_tol)?;
        residuals.push((kf.transpose() * apply_j_cols(&kf)).amax());
    }
    Ok(ResidualReport::from_residuals("kernel_isotropy", tolerance, probes, &residuals))
}

/// Hamiltonian fields `X_{f_a}` of the components of `F`. They span
/// `(Ker F_*)^perp`. Parsed components get exact Jacobians; procedural
/// blocks are differenced.
pub fn component_fields(f: &MapField) -> Vec<SharedField> {
    let n = f.dim();
    let mut out: Vec<SharedField> = Vec::new();
    for block in f.blocks() {
        match block {
            MapBlock::Scalar(sf) => out.push(Arc::new(hamiltonian_vf(sf))),
            MapBlock::Procedural(p) => {
                for a in 0..p.output_dim() {
                    let p = p.clone();
                    let grad = move |x: &DVector<f64>| -> Result<DVector<f64>> {
                        let (_, jac) = p.eval_with_jacobian(x.as_slice())?;
                        Ok(apply_j(&jac.row(a).transpose()))
                    };
                    let grad = Arc::new(grad);
                    let g2 = grad.clone();
                    let field = ClosureField::new(n, &format!("X_f{}", a + 1), move |x| grad(x))
                        .with_jacobian(move |x| fd_jacobian(|y| g2(y), x, GRADIENT_FD_STEP));
                    out.push(Arc::new(field));
                }
            }
        }
    }
    out
}

/// Frobenius test for `(Ker F_*)^perp`: every bracket of the spanning
/// fields must lie in their span. The residual of the least-squares
/// projection is divided by `max(|bracket|, 1)`. Each probe also checks
/// the spanning fields against the symplectic complement of `Ker F_*`.
pub fn frobenius_check(f: &MapField, probes: &ProbeSet, rank_tol: f64, tolerance: f64) -> Result<ResidualReport> {
    let fields = component_fields(f);
    let mut residuals = Vec::with_capacity(probes.len());
    for x in &probes.points {
        let kf = kernel_of(f, x, rank_tol)?;
        let orth = Subspace::new(x.clone(), &kf, rank_tol)?.symp_orth()?;
        let vals = fields.iter().map(|fl| fl.eval(x)).collect::<Result<Vec<_>>>()?;
        let span = linalg::columns(&vals, x.len());
        let basis = linalg::column_space(&span, rank_tol);
        let mut worst = linalg::subspace_distance(&basis, orth.basis()).unwrap_or(f64::INFINITY);
        for i in 0..fields.len() {
            for j in (i + 1)..fields.len() {
                let br = lie_bracket(fields[i].as_ref(), fields[j].as_ref(), x)?;
                let resid = &br - &basis * (basis.transpose() * &br);
                worst = worst.max(resid.norm() / br.norm().max(1.0));
            }
        }
        residuals.push(worst);
    }
    Ok(ResidualReport::from_residuals("frobenius", tolerance, probes, &residuals))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubmersionReport {
    pub transversality: ResidualReport,
    pub isotropy: ResidualReport,
    pub frobenius: ResidualReport,
}

impl SubmersionReport {
    pub fn passed(&self) -> bool {
        self.transversality.passed && self.isotropy.passed && self.frobenius.passed
    }
}

pub fn submersion_checks(pi: &MapField, f: &MapField, probes: &ProbeSet, rank_tol: f64) -> Result<SubmersionReport> {
    Ok(SubmersionReport {
        transversality: transversality_check(pi, f, probes, rank_tol)?,
        isotropy: kernel_isotropy_check(f, probes, rank_tol, RESIDUAL_TOL)?,
        frobenius: frobenius_check(f, probes, rank_tol, FROBENIUS_TOL)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    pub s: usize,
    pub l: usize,
    pub first_integral: ResidualReport,
    pub isotropy: ResidualReport,
    pub frobenius: ResidualReport,
    /// Isotropic, symplectically complete first integrals.
    pub non_commutative: bool,
    /// Additionally `l = s`, so `Ker F_*` is Lagrangian.
    pub commutative: bool,
}

impl IntegrabilityReport {
    pub fn label(&self) -> &'static str {
        match (self.non_commutative, self.commutative) {
            (_, true) => "commutative integrable",
            (true, false) => "non-commutative integrable",
            _ => "not integrable",
        }
    }
}

pub fn integrability_report(
    h: &ScalarField,
    f: &MapField,
    probes: &ProbeSet,
    rank_tol: f64,
) -> Result<IntegrabilityReport> {
    let first_integral = first_integral_residual(f, h, probes, FIRST_INTEGRAL_TOL)?;
    let isotropy = kernel_isotropy_check(f, probes, rank_tol, RESIDUAL_TOL)?;
    let frobenius = frobenius_check(f, probes, rank_tol, FROBENIUS_TOL)?;
    let non_commutative = first_integral.passed && isotropy.passed && frobenius.passed;
    let (s, l) = (f.s(), f.target_dim());
    Ok(IntegrabilityReport {
        s,
        l,
        commutative: non_commutative && l == s,
        non_commutative,
        first_integral,
        isotropy,
        frobenius,
    })
}
