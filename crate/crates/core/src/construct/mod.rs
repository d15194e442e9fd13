//! Construction of first integrals, fibrations and complete solutions.

mod assumptions;
mod duality;
mod fibration;
mod frame;

pub use assumptions::{check_assumptions, vertical_basis, AssumptionReport};
pub use duality::{
    duality_integrals, duality_sigma, duality_sigma_map, half_width_for_radius, CompleteSolution, DomainBox,
    SigmaInverse, SigmaMap, SigmaSettings,
};
pub use fibration::{build_fibration_prop2, DarbouxFibration};
pub use frame::{
    build_first_integrals, chart_probes, extend_frame, ChartCoordinates, ConstructSettings, ExtensionStep,
    FirstIntegralDiagnostics, FirstIntegralSubmersion, FrameInvariants, FrameState, FIRST_INTEGRAL_TOL,
};
