//! Expression language for fields on phase space, with forward-mode
//! differentiation.

mod ast;
mod field;
mod parser;
mod scalar;

pub use ast::{BinOp, Expr, Func, Var};
pub use field::{MapBlock, MapField, ProceduralMap, ScalarField};
pub use parser::parse_expr;
pub use scalar::{Dual, Jet2, Scalar};
