//! Report envelope and machine-readable errors.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// A fully specified experiment: verb, verb-specific parameters, seed, and
/// where the report goes. Reports echo this verbatim so a run can be
/// reproduced by feeding the echo back through `run --config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub verb: String,
    #[serde(default)]
    pub params: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_path: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub config_echo: ExperimentConfig,
    pub results: serde_json::Value,
    pub tool_version: String,
    /// Zeroed under --deterministic so whole files compare byte-for-byte.
    pub wall_time_ms: u64,
}

/// CLI-level failure with a stable machine-readable code. Core errors keep
/// their variant name as the code (TriangleViolation, BadExponents, ...).
#[derive(Debug)]
pub struct CliError {
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        CliError {
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn invalid_params(message: impl Into<String>) -> Self {
        Self::new("InvalidParams", message)
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "code": self.code, "message": self.message } }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for CliError {}

/// Variant name of a core error, used as the machine-readable code.
fn variant_name(debug: &str) -> String {
    debug
        .split(|c: char| c == '(' || c == '{' || c.is_whitespace())
        .next()
        .unwrap_or("Error")
        .to_string()
}

macro_rules! from_core_error {
    ($ty:ty) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError {
                    code: variant_name(&format!("{e:?}")),
                    message: e.to_string(),
                }
            }
        }
    };
}

from_core_error!(snowlab_core::metric::MetricError);
from_core_error!(snowlab_core::lp::LpError);
from_core_error!(snowlab_core::assouad::AssouadError);
from_core_error!(snowlab_core::mn::MnError);
from_core_error!(snowlab_core::invariants::InvariantsError);

impl From<snowlab_core::metric::MatrixIoError> for CliError {
    fn from(e: snowlab_core::metric::MatrixIoError) -> Self {
        match e {
            // Surface the underlying validity failure (TriangleViolation,
            // NonSymmetric, ...) rather than the wrapper.
            snowlab_core::metric::MatrixIoError::Metric(inner) => inner.into(),
            other => CliError {
                code: variant_name(&format!("{other:?}")),
                message: other.to_string(),
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::new("Io", e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::new("Json", e.to_string())
    }
}
