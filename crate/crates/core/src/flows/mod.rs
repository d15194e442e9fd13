//! Flows of vector fields and the flow-box charts that rectify commuting
//! Hamiltonian frames.

mod chart;
mod integrator;
mod lifted;

pub use chart::{hamiltonian_lift, ChartSettings, FlowBoxChart};
pub use integrator::{
    flow, flow_with_tangent, integrate, integrate_with_tangent, FlowResult, IntegratorSettings, Method,
};
pub use lifted::LiftedField;
