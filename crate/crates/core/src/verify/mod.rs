//! Probe-based residual checks of complete solutions, first integrals
//! and their integrability.

mod checks;
mod report;

pub use checks::{
    component_fields, first_integral_residual, frobenius_check, hje_residual, integrability_report, isotropy_residual,
    kernel_isotropy_check, sigma_roundtrip, stacked_roundtrip, submersion_checks, transversality_check,
    IntegrabilityReport, SubmersionReport, FIRST_INTEGRAL_TOL, FROBENIUS_TOL, RESIDUAL_TOL,
};
pub use report::{FailingProbe, ProbeSet, ResidualReport};
