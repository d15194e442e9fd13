pub mod cli;
pub mod config;
pub mod construct;
pub mod error;
pub mod expr;
pub mod flows;
pub mod linalg;
pub mod newton;
pub mod standard;
pub mod symplectic;
pub mod verify;

pub use config::Tolerances;
pub use error::{Error, Result};
