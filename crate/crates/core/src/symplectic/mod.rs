//! Canonical symplectic linear algebra and Hamiltonian vector fields.

mod field;
mod structure;
mod subspace;

pub use field::{
    fd_jacobian, hamiltonian_vf, lie_bracket, poisson, poisson_bracket_field, ClosureField, ConstantField, FieldKind,
    HamiltonianField, LinearField, SharedField, VectorField, FD_STEP,
};
pub use structure::{apply_j, apply_j_cols, j_matrix, omega, SymplecticStructure};
pub use subspace::{Classification, Subspace};
