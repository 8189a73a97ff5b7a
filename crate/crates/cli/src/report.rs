//! `report.toml`: resolved config, results and pass/fail checks.

use std::fs;
use std::path::Path;

use serde::Serialize;
use toml::{Table, Value};

use crate::config::RunConfig;
use crate::error::CliError;

pub const NA: &str = "NA";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    /// Not evaluable, e.g. a standard error from a single path.
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Value,
    pub limit: f64,
    pub status: Status,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub seed: u64,
    pub results: Table,
    pub checks: Vec<Check>,
    pub config: RunConfig,
}

impl Report {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            command: command.into(),
            seed: cfg.seed,
            results: Table::new(),
            checks: Vec::new(),
            config: cfg.clone(),
        }
    }

    pub fn num(&mut self, key: &str, v: f64) {
        self.results.insert(key.into(), Value::Float(v));
    }

    pub fn int(&mut self, key: &str, v: usize) {
        self.results.insert(key.into(), Value::Integer(v as i64));
    }

    pub fn text(&mut self, key: &str, v: impl Into<String>) {
        self.results.insert(key.into(), Value::String(v.into()));
    }

    pub fn opt(&mut self, key: &str, v: Option<f64>) {
        self.results.insert(key.into(), opt_value(v));
    }

    /// Passes when `value <= limit`.
    pub fn at_most(&mut self, name: &str, value: f64, limit: f64) {
        self.checks.push(Check {
            name: name.into(),
            value: Value::Float(value),
            limit,
            status: if value <= limit {
                Status::Pass
            } else {
                Status::Fail
            },
        });
    }

    /// Passes when `value > limit`.
    pub fn above(&mut self, name: &str, value: f64, limit: f64) {
        self.checks.push(Check {
            name: name.into(),
            value: Value::Float(value),
            limit,
            status: if value > limit {
                Status::Pass
            } else {
                Status::Fail
            },
        });
    }

    pub fn skipped(&mut self, name: &str, limit: f64) {
        self.checks.push(Check {
            name: name.into(),
            value: Value::String(NA.into()),
            limit,
            status: Status::Skipped,
        });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("report serializes")
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        fs::write(dir.join("report.toml"), self.to_toml())?;
        Ok(())
    }
}

pub fn opt_value(v: Option<f64>) -> Value {
    match v {
        Some(x) => Value::Float(x),
        None => Value::String(NA.into()),
    }
}
