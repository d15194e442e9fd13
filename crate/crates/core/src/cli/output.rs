use std::path::Path;

use serde::{Deserialize, Serialize};

use super::commands::RunReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

/// A numeric table destined for a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn table_csv(table: &Table) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&table.header).map_err(csv_error)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| format_float(*v))).map_err(csv_error)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))
}

/// One row per residual check.
pub fn report_csv(report: &RunReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["check", "max_residual", "tolerance", "probe_count", "failing", "passed", "seed"])
        .map_err(csv_error)?;
    for c in report.all_checks() {
        w.write_record([
            c.check.clone(),
            format_float(c.max_residual),
            format_float(c.tolerance),
            c.probe_count.to_string(),
            c.failing.len().to_string(),
            c.passed.to_string(),
            c.seed.map_or(String::new(), |s| s.to_string()),
        ])
        .map_err(csv_error)?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))
}

pub fn report_json(report: &RunReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Writes the report and every table into `dir`.
pub fn write_outputs(dir: &Path, report: &RunReport, tables: &[Table], format: Format) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let (name, body) = match format {
        Format::Json => ("report.json", report_json(report)),
        Format::Csv => ("report.csv", report_csv(report)?),
    };
    std::fs::write(dir.join(name), body)?;
    written.push(name.to_string());
    for t in tables {
        std::fs::write(dir.join(&t.file), table_csv(t)?)?;
        written.push(t.file.clone());
    }
    Ok(written)
}
