use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// The variants are grouped by the exit-code class the command line maps
/// them to (see [`Error::exit_code`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("variable `{name}` exceeds the phase-space dimension s = {s}")]
    VariableOutOfRange { name: String, s: usize },

    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("rank degeneracy: {0}")]
    RankDegenerate(String),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonFailed { iterations: usize, residual: f64 },

    #[error("point lies outside the chart domain")]
    OutsideChartDomain,

    #[error("hypothesis ({which}) violated: {detail}")]
    Hypothesis { which: String, detail: String },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no admissible extension index at r = {r}: best stacked rank {best_rank} of required {required}")]
    NoAdmissibleIndex { r: usize, best_rank: usize, required: usize },

    #[error("transversality fails: stacked Jacobian is singular ({0})")]
    Transversality(String),

    #[error("domain shrank below the minimum size ({0})")]
    DomainTooSmall(String),

    #[error("verification failed: {0}")]
    Verification(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code for this error: 1 for hypothesis or verification
    /// failures, 2 for numerical failures, 3 for configuration problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Hypothesis { .. } | Error::Verification(_) | Error::Transversality(_) => 1,
            Error::Domain { .. }
            | Error::RankDegenerate(_)
            | Error::Integrator(_)
            | Error::NewtonFailed { .. }
            | Error::OutsideChartDomain
            | Error::NoAdmissibleIndex { .. }
            | Error::DomainTooSmall(_)
            | Error::Precondition(_)
            | Error::DimensionMismatch { .. } => 2,
            Error::Syntax { .. }
            | Error::UnknownIdentifier { .. }
            | Error::VariableOutOfRange { .. }
            | Error::Config(_)
            | Error::Io(_) => 3,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
