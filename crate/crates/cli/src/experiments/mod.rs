//! Experiment strategies behind a common trait, registered by verb name and
//! selected at runtime from the CLI or a config file.

mod embeddings;
mod kernel;
mod spaces;

use crate::params::Params;
use crate::report::CliError;
use std::collections::BTreeMap;

/// Payload of a finished experiment plus whether any checked inequality was
/// violated (violations map to exit code 2, not to an error).
pub struct RunOutcome {
    pub results: serde_json::Value,
    pub violation: bool,
}

pub trait Experiment: Sync {
    fn verb(&self) -> &'static str;

    /// Fixed, documented column set this experiment contributes to sweep CSV
    /// output.
    fn csv_columns(&self) -> &'static [&'static str];

    /// Pull the column values out of a results payload produced by `run`.
    fn csv_row(&self, results: &serde_json::Value) -> Vec<String>;

    fn run(&self, params: &Params, seed: u64) -> Result<RunOutcome, CliError>;
}

pub struct Registry {
    by_verb: BTreeMap<&'static str, Box<dyn Experiment>>,
}

impl Registry {
    pub fn builtin() -> Self {
        let mut reg = Registry {
            by_verb: BTreeMap::new(),
        };
        reg.register(Box::new(embeddings::SnowflakeVerify));
        reg.register(Box::new(embeddings::EmbedSeqVerify));
        reg.register(Box::new(kernel::MnCheck));
        reg.register(Box::new(kernel::IndicatorCheck));
        reg.register(Box::new(spaces::Roundness));
        reg.register(Box::new(spaces::Enflo));
        reg.register(Box::new(spaces::ScalingCheck));
        reg.register(Box::new(spaces::Distortion));
        reg
    }

    pub fn register(&mut self, exp: Box<dyn Experiment>) {
        let verb = exp.verb();
        if self.by_verb.insert(verb, exp).is_some() {
            panic!("duplicate experiment verb {verb}");
        }
    }

    pub fn get(&self, verb: &str) -> Result<&dyn Experiment, CliError> {
        self.by_verb.get(verb).map(|b| b.as_ref()).ok_or_else(|| {
            CliError::new(
                "UnknownVerb",
                format!(
                    "no experiment named {verb:?}; known verbs: {}",
                    self.verbs().collect::<Vec<_>>().join(", ")
                ),
            )
        })
    }

    pub fn verbs(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.by_verb.keys().copied()
    }
}

/// Fetch a JSON field for CSV extraction; missing fields become empty cells.
pub(crate) fn cell(results: &serde_json::Value, key: &str) -> String {
    match results.get(key) {
        None | Some(serde_json::Value::Null) => String::new(),
        Some(serde_json::Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}
