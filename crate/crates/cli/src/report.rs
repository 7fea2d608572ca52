use serde::{Deserialize, Serialize};

/// One pass/fail line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// `"<="` or `">="`.
    pub comparison: String,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            comparison: "<=".into(),
            threshold,
            pass: measured <= threshold,
        }
    }

    pub fn at_least(name: &str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            comparison: ">=".into(),
            threshold,
            pass: measured >= threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Path relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub wall_seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Passed,
    ChecksFailed,
    Error,
}

/// Everything a run produced. Apart from `timings`, identical inputs give
/// identical reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: Vec<String>,
    /// SHA-256 of the effective configuration after flag overrides.
    pub config_hash: Option<String>,
    pub outcome: Outcome,
    /// 0 when every check passed, 1 when one failed, 2 for configuration
    /// errors.
    pub exit_code: i32,
    pub error: Option<String>,
    pub checks: Vec<Check>,
    pub results: serde_json::Value,
    pub outputs: Vec<OutputFile>,
    pub timings: Timings,
}
