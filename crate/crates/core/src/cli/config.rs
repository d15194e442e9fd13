use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::construct::DomainBox;
use crate::error::{Error, Result};
use crate::expr::{MapField, ScalarField};
use crate::standard::SimpleHamiltonian;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HamiltonianSpec {
    Expression(String),
    Simple { cometric: Vec<Vec<String>>, potential: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FibrationSpec {
    Components(Vec<String>),
    /// Only `"auto"` is accepted.
    Keyword(String),
}

/// A closed-form complete solution over the box `center +- half_widths`.
/// Components read `(n, lambda)` through the names `q1 .. qs, p1 .. ps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolutionSpec {
    pub components: Vec<String>,
    pub center: Vec<f64>,
    pub half_widths: Vec<f64>,
}

fn default_radius() -> f64 {
    0.5
}
fn default_probes() -> usize {
    50
}
fn default_grid() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension_s: usize,
    pub hamiltonian: HamiltonianSpec,
    pub fibration: FibrationSpec,
    /// Rank of the fibration built for `"auto"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// First integrals for the integrability command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrals: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionSpec>,
    pub base_point: Vec<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_radius")]
    pub domain_radius: f64,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_grid")]
    pub lambda_grid: usize,
    #[serde(default = "default_grid")]
    pub q_grid: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.dimension_s;
        let fail = |msg: String| Err(Error::Config(msg));
        if s == 0 {
            return fail("dimension_s must be positive".into());
        }
        if self.base_point.len() != 2 * s {
            return fail(format!("base_point has {} entries, expected {}", self.base_point.len(), 2 * s));
        }
        if self.base_point.iter().any(|v| !v.is_finite()) {
            return fail("base_point must be finite".into());
        }
        self.tolerances.validate().map_err(Error::Config)?;
        if !(self.domain_radius.is_finite() && self.domain_radius > 0.0) {
            return fail("domain_radius must be positive".into());
        }
        if self.probes == 0 || self.lambda_grid == 0 || self.q_grid == 0 {
            return fail("probes and grid sizes must be positive".into());
        }
        match &self.fibration {
            FibrationSpec::Keyword(word) if word == "auto" => match self.k {
                Some(k) if (1..=s).contains(&k) => {}
                Some(k) => return fail(format!("auto fibration needs 1 <= k <= s = {s}, got k = {k}")),
                None => return fail("auto fibration needs k".into()),
            },
            FibrationSpec::Keyword(word) => return fail(format!("unknown fibration keyword `{word}`")),
            FibrationSpec::Components(c) => {
                if c.is_empty() || c.len() >= 2 * s {
                    return fail(format!("fibration must have between 1 and {} components", 2 * s - 1));
                }
                if self.k.is_some_and(|k| k != c.len()) {
                    return fail("k disagrees with the fibration length".into());
                }
            }
        }
        if let Some(sol) = &self.solution {
            if sol.components.len() != 2 * s || sol.center.len() != 2 * s || sol.half_widths.len() != 2 * s {
                return fail(format!("solution needs {} components, center and half_widths entries", 2 * s));
            }
            if sol.half_widths.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
                return fail("solution half_widths must be positive".into());
            }
            if self.fibration_components().is_none() {
                return fail("a closed-form solution needs an explicit fibration".into());
            }
        }
        // Surface expression errors as configuration errors.
        self.hamiltonian()?;
        if let Some(c) = self.fibration_components() {
            MapField::from_exprs(c, s).map_err(config_error)?;
        }
        if let Some(f) = &self.integrals {
            MapField::from_exprs(f, s).map_err(config_error)?;
        }
        Ok(())
    }

    pub fn s(&self) -> usize {
        self.dimension_s
    }

    pub fn base_point(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.base_point)
    }

    pub fn is_auto(&self) -> bool {
        matches!(self.fibration, FibrationSpec::Keyword(_))
    }

    pub fn fibration_components(&self) -> Option<&[String]> {
        match &self.fibration {
            FibrationSpec::Components(c) => Some(c),
            FibrationSpec::Keyword(_) => None,
        }
    }

    pub fn simple_hamiltonian(&self) -> Result<Option<SimpleHamiltonian>> {
        match &self.hamiltonian {
            HamiltonianSpec::Expression(_) => Ok(None),
            HamiltonianSpec::Simple { cometric, potential } => {
                SimpleHamiltonian::new(cometric, potential, self.s()).map(Some).map_err(config_error)
            }
        }
    }

    pub fn hamiltonian(&self) -> Result<ScalarField> {
        match &self.hamiltonian {
            HamiltonianSpec::Expression(src) => ScalarField::parse(src, self.s()).map_err(config_error),
            HamiltonianSpec::Simple { .. } => Ok(self.simple_hamiltonian()?.expect("simple").hamiltonian().clone()),
        }
    }

    pub fn solution_box(&self) -> Option<DomainBox> {
        self.solution.as_ref().map(|sol| DomainBox { center: sol.center.clone(), half_widths: sol.half_widths.clone() })
    }
}

/// Expression problems inside a config are configuration errors.
fn config_error(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        Error::Syntax { .. } | Error::UnknownIdentifier { .. } | Error::VariableOutOfRange { .. } => {
            Error::Config(e.to_string())
        }
        other => other,
    }
}
