//! Typed access to the verb-specific key/value parameter map.

use crate::report::CliError;
use serde_json::Value;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default)]
pub struct Params {
    map: BTreeMap<String, Value>,
}

impl Params {
    pub fn new(map: BTreeMap<String, Value>) -> Self {
        Params { map }
    }

    #[cfg(test)]
    pub fn set(&mut self, key: &str, value: Value) {
        self.map.insert(key.to_string(), value);
    }

    pub fn f64(&self, key: &str, default: f64) -> Result<f64, CliError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => parse_f64(v)
                .ok_or_else(|| CliError::invalid_params(format!("{key} must be a number"))),
        }
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, CliError> {
        self.map
            .get(key)
            .and_then(parse_f64)
            .ok_or_else(|| CliError::invalid_params(format!("missing numeric parameter {key}")))
    }

    pub fn u64(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .or_else(|| {
                    v.as_f64()
                        .filter(|f| f.fract() == 0.0 && *f >= 0.0 && *f <= u64::MAX as f64)
                        .map(|f| f as u64)
                })
                .or_else(|| v.as_str().and_then(|s| s.parse().ok()))
                .ok_or_else(|| {
                    CliError::invalid_params(format!("{key} must be a nonnegative integer"))
                }),
        }
    }

    pub fn usize(&self, key: &str, default: usize) -> Result<usize, CliError> {
        Ok(self.u64(key, default as u64)? as usize)
    }

    pub fn string(&self, key: &str) -> Result<Option<String>, CliError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Ok(Some(other.to_string())),
        }
    }

    pub fn require_string(&self, key: &str) -> Result<String, CliError> {
        self.string(key)?
            .ok_or_else(|| CliError::invalid_params(format!("missing parameter {key}")))
    }

    /// A list of reals, given as a JSON array, a bare number, or "a,b,c".
    pub fn f64_list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, CliError> {
        match self.map.get(key) {
            None => Ok(default.to_vec()),
            Some(Value::Number(n)) => n
                .as_f64()
                .map(|x| vec![x])
                .ok_or_else(|| CliError::invalid_params(format!("{key} must be a number"))),
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| {
                    parse_f64(v).ok_or_else(|| {
                        CliError::invalid_params(format!("{key} entries must be numbers"))
                    })
                })
                .collect(),
            Some(Value::String(s)) => s
                .split(',')
                .map(|tok| {
                    tok.trim().parse::<f64>().map_err(|_| {
                        CliError::invalid_params(format!("{key} entry {tok:?} is not a number"))
                    })
                })
                .collect(),
            Some(_) => Err(CliError::invalid_params(format!(
                "{key} must be a list of numbers"
            ))),
        }
    }
}

fn parse_f64(v: &Value) -> Option<f64> {
    v.as_f64().or_else(|| v.as_str().and_then(|s| s.parse().ok()))
}
