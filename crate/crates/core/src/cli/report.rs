//! Versioned report files and their CSV rendering.

use serde::{Deserialize, Serialize};

use crate::displacement::{DisplacementEstimate, EstimatorConfig, Method};
use crate::error::{Error, Result};
use crate::verify::CheckReport;

use super::format::{fmt_f64, num, num_vec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    #[serde(with = "opt_vec")]
    pub x0: Option<Vec<f64>>,
    pub max_iter: usize,
    #[serde(with = "num")]
    pub tol: f64,
}

impl From<&EstimatorConfig> for EstimatorSettings {
    fn from(c: &EstimatorConfig) -> Self {
        Self { x0: c.x0.as_ref().map(|v| v.iter().copied().collect()), max_iter: c.max_iter, tol: c.tol }
    }
}

mod opt_vec {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Wrap(#[serde(with = "super::num_vec")] Vec<f64>);

    pub fn serialize<S: Serializer>(x: &Option<Vec<f64>>, s: S) -> Result<S::Ok, S::Error> {
        x.as_ref().map(|v| Wrap(v.clone())).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<f64>>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub label: String,
    pub operator: String,
    pub method: Method,
    #[serde(with = "num_vec")]
    pub vector: Vec<f64>,
    #[serde(with = "num")]
    pub norm: f64,
    #[serde(with = "num")]
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl EstimateRecord {
    pub fn new(label: &str, operator: String, est: &DisplacementEstimate) -> Self {
        Self {
            label: label.to_string(),
            operator,
            method: est.method,
            vector: est.vector.iter().copied().collect(),
            norm: est.vector.norm(),
            residual: est.residual,
            iterations: est.iterations,
            converged: est.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    /// Failures of checks whose hypotheses did not hold.
    pub expected_failures: usize,
    pub ok: bool,
}

impl Summary {
    pub fn of(checks: &[CheckReport]) -> Self {
        let passed = checks.iter().filter(|c| c.pass).count();
        let expected_failures = checks.iter().filter(|c| !c.pass && !c.hypothesis_met).count();
        let failed = checks.len() - passed - expected_failures;
        Self { total: checks.len(), passed, failed, expected_failures, ok: failed == 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Report {
    Estimate { schema_version: u32, scenario: String, seed: u64, estimator: EstimatorSettings, estimates: Vec<EstimateRecord> },
    Verify { schema_version: u32, scenario: String, seed: u64, summary: Summary, checks: Vec<CheckReport> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

impl Report {
    pub fn parse(text: &str) -> Result<Self> {
        let report: Report = serde_json::from_str(text)
            .map_err(|e| Error::input(format!("invalid report at line {}, column {}: {e}", e.line(), e.column())))?;
        let version = match &report {
            Report::Estimate { schema_version, .. } | Report::Verify { schema_version, .. } => *schema_version,
        };
        if version != SCHEMA_VERSION {
            return Err(Error::input(format!("unsupported schema_version {version}, expected {SCHEMA_VERSION}")));
        }
        Ok(report)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are serializable");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Numerical(format!("CSV encoding failed: {e}"));
        match self {
            Report::Verify { checks, .. } => {
                w.write_record(["check_name", "pass", "discrepancy", "tolerance", "seed", "witness_summary"]).map_err(io)?;
                for c in checks {
                    let witness = c.witness.as_ref().map(|v| v.to_string()).unwrap_or_default();
                    w.write_record([
                        c.check_name.as_str(),
                        if c.pass { "true" } else { "false" },
                        &fmt_f64(c.discrepancy),
                        &fmt_f64(c.tolerance),
                        &c.seed.to_string(),
                        &witness,
                    ])
                    .map_err(io)?;
                }
            }
            Report::Estimate { estimates, .. } => {
                w.write_record(["label", "method", "vector", "norm", "residual", "iterations", "converged"]).map_err(io)?;
                for e in estimates {
                    let vector: Vec<String> = e.vector.iter().map(|x| fmt_f64(*x)).collect();
                    let method = serde_json::to_value(e.method).expect("method serializes");
                    w.write_record([
                        e.label.as_str(),
                        method.as_str().unwrap_or_default(),
                        &vector.join(" "),
                        &fmt_f64(e.norm),
                        &fmt_f64(e.residual),
                        &e.iterations.to_string(),
                        if e.converged { "true" } else { "false" },
                    ])
                    .map_err(io)?;
                }
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Numerical(format!("CSV encoding failed: {e}")))?;
        Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => Ok(self.to_json()),
            Format::Csv => self.to_csv(),
        }
    }
}
