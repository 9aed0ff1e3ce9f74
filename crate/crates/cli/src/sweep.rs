//! Parameter sweeps: one CSV row per axis value, errors flagged per row.

use crate::experiments::Registry;
use crate::params::Params;
use crate::report::CliError;
use serde_json::Value;
use std::collections::BTreeMap;

/// Parse a CLI value: numbers become JSON numbers, everything else strings.
pub fn parse_value(tok: &str) -> Value {
    match tok.trim().parse::<f64>() {
        Ok(x) => serde_json::json!(x),
        Err(_) => Value::String(tok.trim().to_string()),
    }
}

pub struct SweepResult {
    pub csv: String,
    pub violation: bool,
}

/// Run `verb` once per axis value, overriding `axis` in the base parameter
/// map. Rows for failed runs carry the error code in the last column and the
/// stream continues.
pub fn run_sweep(
    registry: &Registry,
    verb: &str,
    axis: &str,
    values: &[String],
    base: BTreeMap<String, Value>,
    seed: u64,
) -> Result<SweepResult, CliError> {
    let exp = registry.get(verb)?;
    let mut csv = String::new();
    csv.push_str(&format!("{axis},{},error\n", exp.csv_columns().join(",")));
    let mut violation = false;
    for raw in values {
        let mut map = base.clone();
        map.insert(axis.to_string(), parse_value(raw));
        let params = Params::new(map);
        match exp.run(&params, seed) {
            Ok(outcome) => {
                violation |= outcome.violation;
                let row = exp.csv_row(&outcome.results);
                csv.push_str(&format!("{},{},\n", raw.trim(), row.join(",")));
            }
            Err(e) => {
                let blanks = vec![String::new(); exp.csv_columns().len()];
                csv.push_str(&format!("{},{},{}\n", raw.trim(), blanks.join(","), e.code));
            }
        }
    }
    Ok(SweepResult { csv, violation })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_values_emit_header_only() {
        let reg = Registry::builtin();
        let out = run_sweep(&reg, "snowflake-verify", "q", &[], BTreeMap::new(), 1).unwrap();
        assert_eq!(out.csv.lines().count(), 1);
        assert!(out.csv.starts_with("q,"));
        assert!(!out.violation);
    }

    #[test]
    fn row_errors_are_flagged_and_stream_continues(){
        let reg = Registry::builtin();
        let mut base = BTreeMap::new();
        base.insert("p".to_string(), serde_json::json!(1.0));
        base.insert("pairs".to_string(), serde_json::json!(10));
        // q = 0.5 < p is invalid and must not abort the sweep.
        let out = run_sweep(
            &reg,
            "snowflake-verify",
            "q",
            &["0.5".into(), "2.0".into()],
            base,
            7,
        )
        .unwrap();
        let lines: Vec<_> = out.csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[1].ends_with("BadExponents"));
        assert!(lines[2].ends_with(","));
    }
}
