//! Structured JSON reports shared by all pipelines.
//!
//! A report carries the schema version, the full effective configuration,
//! SHA-256 digests of every input, the random seed and the verdict. With the
//! deterministic flag set nothing time- or scheduling-dependent is written, so
//! identical configurations give byte-identical files.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const SCHEMA_VERSION: &str = "hyperweyl-report/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InputDigest {
    /// Path as written in the configuration, or `"<config>"` for the configuration itself.
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of_bytes(path: impl Into<String>, bytes: &[u8]) -> Self {
        InputDigest { path: path.into(), sha256: hex::encode(Sha256::digest(bytes)) }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema_version: &'static str,
    pub command: String,
    pub config: Value,
    pub inputs: Vec<InputDigest>,
    pub seed: u64,
    pub deterministic: bool,
    pub passed: bool,
    pub violations: Vec<String>,
    /// Files written next to the report, by name.
    pub artifacts: Vec<String>,
    pub results: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Collects violations while a pipeline runs.
#[derive(Debug, Default)]
pub struct Verdict {
    pub violations: Vec<String>,
}

impl Verdict {
    /// Records `what` unless `ok`.
    pub fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(what());
        }
    }

    /// Records a violation unless `value <= bound`; NaN counts as a violation.
    pub fn at_most(&mut self, name: &str, value: f64, bound: f64) {
        self.check(value <= bound, || format!("{name} = {value:e} exceeds {bound:e}"));
    }

    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_hex_sha256() {
        let d = InputDigest::of_bytes("x", b"abc");
        assert_eq!(d.sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn verdict_treats_nan_as_violation() {
        let mut v = Verdict::default();
        v.at_most("a", 1.0, 2.0);
        assert!(v.passed());
        v.at_most("b", f64::NAN, 2.0);
        assert_eq!(v.violations.len(), 1);
    }
}
