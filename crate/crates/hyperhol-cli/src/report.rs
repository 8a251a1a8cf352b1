//! The versioned JSON report and its check entries.

use crate::config::ExperimentConfig;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Version of the report layout; bumped on breaking changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Exit status: every check passed.
pub const EXIT_PASS: i32 = 0;
/// Exit status: configuration or module error.
pub const EXIT_ERROR: i32 = 1;
/// Exit status: at least one check failed.
pub const EXIT_CHECK_FAILURE: i32 = 2;

/// One named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    /// Catalog name.
    pub name: String,
    /// Verdict.
    pub passed: bool,
    /// Measured value (`null` when not finite).
    pub value: Option<f64>,
    /// Threshold the value is compared with.
    pub tolerance: f64,
    /// Comparison, sample counts and context.
    pub detail: String,
}

impl CheckEntry {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        CheckEntry {
            name: name.into(),
            passed: value <= tolerance,
            value: value.is_finite().then_some(value),
            tolerance,
            detail: detail.into(),
        }
    }

    /// Passes when `value > tolerance`.
    pub fn above(name: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        CheckEntry {
            name: name.into(),
            passed: value > tolerance,
            value: value.is_finite().then_some(value),
            tolerance,
            detail: detail.into(),
        }
    }

    /// Passes when `value < tolerance` (strict upper bound).
    pub fn below(name: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        CheckEntry {
            name: name.into(),
            passed: value < tolerance,
            value: value.is_finite().then_some(value),
            tolerance,
            detail: detail.into(),
        }
    }
}

/// A structured error entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    /// Error variant, e.g. `ConfigInvalid`.
    pub kind: String,
    /// Human-readable message.
    pub message: String,
}

/// The report of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    /// [`SCHEMA_VERSION`].
    pub schema_version: u32,
    /// Experiment name.
    pub experiment: String,
    /// Seed of the run.
    pub seed: u64,
    /// Effective configuration (absent when it could not be read).
    pub config: Option<ExperimentConfig>,
    /// Checks in execution order.
    pub checks: Vec<CheckEntry>,
    /// Experiment-specific measurements.
    pub data: Value,
    /// Error that aborted the experiment, if any.
    pub error: Option<ErrorEntry>,
}

impl Report {
    /// Exit status: error, check failure or pass.
    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            EXIT_ERROR
        } else if self.checks.iter().any(|c| !c.passed) {
            EXIT_CHECK_FAILURE
        } else {
            EXIT_PASS
        }
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Name of the error variant of a library error.
pub fn error_kind(e: &hyperhol::error::HyperholError) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string()
}
