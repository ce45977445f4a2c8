use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Outcome of one numerical check. A check fails iff `measured > bound + tolerance`.
/// All numbers are finite so that reports round-trip through JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    /// Set when the instance violated the hypotheses of the checked statement.
    #[serde(default)]
    pub skipped: bool,
    pub measured: f64,
    pub bound: f64,
    /// `bound - measured`.
    pub margin: f64,
    pub tolerance: f64,
    pub descriptor: Descriptor,
}

/// Everything needed to reproduce an instance.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Descriptor {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub extents: Vec<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub local_dims: Vec<usize>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub params: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Descriptor {
    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

impl CheckReport {
    pub fn new(name: &str, measured: f64, bound: f64, tolerance: f64, descriptor: Descriptor) -> Self {
        // NaN never passes
        let pass = measured <= bound + tolerance;
        CheckReport {
            name: name.to_string(),
            pass,
            skipped: false,
            measured,
            bound,
            margin: bound - measured,
            tolerance,
            descriptor,
        }
    }

    pub fn skipped(name: &str, reason: impl Into<String>, descriptor: Descriptor) -> Self {
        CheckReport {
            name: name.to_string(),
            pass: true,
            skipped: true,
            measured: 0.0,
            bound: 0.0,
            margin: 0.0,
            tolerance: 0.0,
            descriptor: descriptor.note(reason),
        }
    }

    pub fn failed(&self) -> bool {
        !self.pass
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("reports always serialize")
    }
}
