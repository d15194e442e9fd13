//! Scenario configuration, the built-in registry, and the batch commands.

mod commands;
mod config;
mod output;
mod registry;

pub use commands::{
    construct_settings, grid_points, run, solve, CharacteristicReport, Command, RunOutput, RunReport, ScenarioSolution,
    CHARACTERISTIC_TOL, ROUNDTRIP_TOL,
};
pub use config::{FibrationSpec, HamiltonianSpec, ScenarioConfig, SolutionSpec};
pub use output::{format_float, report_csv, report_json, table_csv, write_outputs, Format, Table};
pub use registry::{lookup, registry, Scenario};
