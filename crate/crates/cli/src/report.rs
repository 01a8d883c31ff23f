//! Machine-readable run reports.

use std::collections::BTreeMap;
use std::path::Path;

use enlarge_core::enlargement::{Verdict, Witness};
use enlarge_core::Tolerances;
use serde::{Deserialize, Serialize};

use crate::config::{Command, RunConfig};
use crate::CliError;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub constants: BTreeMap<String, f64>,
}

impl CheckRecord {
    /// A verdict backed by its constants, with the witness on failure.
    pub fn new(name: impl Into<String>, verdict: Verdict, witness: Option<Witness>, constants: &[(&str, f64)]) -> Self {
        let constants: BTreeMap<String, f64> = constants
            .iter()
            .filter(|(_, v)| v.is_finite())
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        let witness = match (witness, verdict, constants.is_empty()) {
            (Some(w), ..) => Some(w),
            (None, Verdict::Pass, false) => None,
            (None, v, _) => Some(Witness::Message {
                reason: format!("{v:?} without a recorded witness"),
            }),
        };
        Self {
            name: name.into(),
            verdict,
            witness,
            constants,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub command: Command,
    /// Effective configuration, with the problem inlined.
    pub config: RunConfig,
    pub tolerances: Tolerances,
    pub verdict: Verdict,
    pub checks: Vec<CheckRecord>,
    pub constants: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
    /// Paths relative to the output directory.
    pub artifacts: Vec<String>,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub details: serde_json::Value,
}

impl RunReport {
    pub fn new(config: RunConfig, tolerances: Tolerances) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            command: config.command,
            config,
            tolerances,
            verdict: Verdict::Pass,
            checks: Vec::new(),
            constants: BTreeMap::new(),
            notes: BTreeMap::new(),
            artifacts: Vec::new(),
            details: serde_json::Value::Null,
        }
    }

    pub fn push(&mut self, check: CheckRecord) {
        self.verdict = self.verdict.and(check.verdict);
        self.checks.push(check);
    }

    pub fn constant(&mut self, key: &str, value: f64) {
        if value.is_finite() {
            self.constants.insert(key.to_string(), value);
        }
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.notes.insert(key.to_string(), value.into());
    }

    pub fn artifact(&mut self, name: impl Into<String>) {
        self.artifacts.push(name.into());
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(dir.join("report.json"), text + "\n")?;
        Ok(())
    }

    /// One line per check.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = match c.verdict {
                Verdict::Pass => "PASS",
                Verdict::Fail => "FAIL",
                Verdict::Indeterminate => "INDETERMINATE",
            };
            out.push_str(&format!("{tag:<13} {}", c.name));
            if let Some(w) = &c.witness {
                if c.verdict != Verdict::Pass {
                    out.push_str(&format!("  {}", serde_json::to_string(w).unwrap_or_default()));
                }
            }
            out.push('\n');
        }
        out.push_str(&format!("verdict: {:?}\n", self.verdict));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdicts_always_carry_backing() {
        let c = CheckRecord::new("x", Verdict::Fail, None, &[]);
        assert!(c.witness.is_some());
        let p = CheckRecord::new("y", Verdict::Pass, None, &[("K", 2.0)]);
        assert!(p.witness.is_none() && p.constants["K"] == 2.0);
        let bare = CheckRecord::new("z", Verdict::Pass, None, &[("K", f64::INFINITY)]);
        assert!(bare.witness.is_some());
    }
}
