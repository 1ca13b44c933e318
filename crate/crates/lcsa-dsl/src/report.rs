//! Machine-readable reports with a stable schema; rationals are always
//! serialized as `p/q` strings, never floats.

use std::collections::BTreeMap;

use serde::Serialize;

pub const TOOL: &str = "lcsa";

#[derive(Serialize, Clone, Debug)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub algebra: String,
    pub check: String,
    pub status: String,
    pub witnesses: Vec<String>,
    pub dims: BTreeMap<String, String>,
    pub characters: BTreeMap<String, String>,
}

impl Report {
    pub fn new(algebra: &str, check: &str, passed: bool) -> Self {
        Report {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            algebra: algebra.into(),
            check: check.into(),
            status: if passed { "pass" } else { "fail" }.into(),
            witnesses: Vec::new(),
            dims: BTreeMap::new(),
            characters: BTreeMap::new(),
        }
    }

    pub fn with_witnesses(mut self, w: Vec<String>) -> Self {
        self.witnesses = w;
        self
    }
}

pub fn emit_report(report: &Report) -> String {
    serde_json::to_string_pretty(report).expect("report serialization")
}
