//! Input loading with content hashes, and the run manifest.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use tsrecon::io::{load_panel_from_reader, load_response_from_reader};
use tsrecon::pca::ProxyPanel;
use tsrecon::TimeSeries;

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub role: String,
    pub path: String,
    pub sha256: String,
    pub column: Option<String>,
    pub rows_read: usize,
    pub first_year: i64,
    pub last_year: i64,
    pub missing_cells: usize,
    pub filled_years: Vec<i64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Alignment {
    pub what: String,
    pub response_years: (i64, i64),
    pub covariate_years: (i64, i64),
    pub used_years: (i64, i64),
    pub response_trimmed: usize,
    pub covariate_trimmed: usize,
}

#[derive(Debug, Default)]
pub struct Context {
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<OutputRecord>,
    pub alignment: Vec<Alignment>,
}

impl Context {
    fn read(path: &Path) -> Result<Vec<u8>, CliError> {
        std::fs::read(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
    }

    pub fn response(&mut self, role: &str, path: &Path, column: Option<&str>) -> Result<TimeSeries, CliError> {
        let bytes = Self::read(path)?;
        let file = path.display().to_string();
        let (series, name, report) = load_response_from_reader(bytes.as_slice(), &file, column)?;
        self.inputs.push(InputRecord {
            role: role.into(),
            path: file,
            sha256: sha256_hex(&bytes),
            column: Some(name),
            rows_read: report.rows_read,
            first_year: report.first_year,
            last_year: report.last_year,
            missing_cells: report.missing.len(),
            filled_years: report.filled_years,
        });
        Ok(series)
    }

    pub fn panel(&mut self, path: &Path) -> Result<ProxyPanel, CliError> {
        let bytes = Self::read(path)?;
        let file = path.display().to_string();
        let (panel, report) = load_panel_from_reader(bytes.as_slice(), &file)?;
        self.inputs.push(InputRecord {
            role: "panel".into(),
            path: file,
            sha256: sha256_hex(&bytes),
            column: None,
            rows_read: report.rows_read,
            first_year: report.first_year,
            last_year: report.last_year,
            missing_cells: report.missing.len(),
            filled_years: report.filled_years,
        });
        Ok(panel)
    }

    pub fn wrote(&mut self, role: &str, path: &Path, bytes: &[u8]) -> Result<(), CliError> {
        std::fs::write(path, bytes)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(OutputRecord {
            role: role.into(),
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Trim two series to their common years, recording the trim.
    pub fn intersect(&mut self, what: &str, y: &TimeSeries, x: &TimeSeries) -> Result<(TimeSeries, TimeSeries), CliError> {
        let from = y.start_time().max(x.start_time());
        let to = y.end_time().min(x.end_time());
        if from > to {
            return Err(CliError::Compute(tsrecon::Error::InvalidArgument(format!(
                "{what}: response years {}..={} and covariate years {}..={} do not overlap",
                y.start_time(),
                y.end_time(),
                x.start_time(),
                x.end_time()
            ))));
        }
        let yw = y.window(from, to)?;
        let xw = x.window(from, to)?;
        self.alignment.push(Alignment {
            what: what.into(),
            response_years: (y.start_time(), y.end_time()),
            covariate_years: (x.start_time(), x.end_time()),
            used_years: (from, to),
            response_trimmed: y.len() - yw.len(),
            covariate_trimmed: x.len() - xw.len(),
        });
        Ok((yw, xw))
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub args: Vec<String>,
    pub seed: u64,
    pub inputs: Vec<InputRecord>,
    pub outputs: Vec<OutputRecord>,
    pub alignment: Vec<Alignment>,
}

impl Manifest {
    pub fn new(command: &str, args: Vec<String>, seed: u64, ctx: Context) -> Self {
        Self {
            tool: "tsrecon",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            args,
            seed,
            inputs: ctx.inputs,
            outputs: ctx.outputs,
            alignment: ctx.alignment,
        }
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("manifest serializes")
    }
}

