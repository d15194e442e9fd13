use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every module.
///
/// Rank decisions are relative: a singular value counts as nonzero when it
/// exceeds `rank * sigma_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub rank: f64,
    pub newton: f64,
    pub ode_abs: f64,
    pub ode_rel: f64,
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rank: 1e-9, newton: 1e-10, ode_abs: 1e-10, ode_rel: 1e-10, residual: 1e-5 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<(), String> {
        let all = [
            ("rank", self.rank),
            ("newton", self.newton),
            ("ode_abs", self.ode_abs),
            ("ode_rel", self.ode_rel),
            ("residual", self.residual),
        ];
        for (name, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("tolerance `{name}` must be positive, got {v}"));
            }
        }
        Ok(())
    }
}
