//! Structured verdicts shared by every checker.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Degenerate,
    NotApplicable,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Degenerate => "degenerate",
            Verdict::NotApplicable => "not-applicable",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Outcome of one check, with every extracted constant and residual as an
/// exact string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub verdict: Verdict,
    pub constants: BTreeMap<String, String>,
    pub residuals: BTreeMap<String, String>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>) -> Self {
        CheckReport {
            check: check.into(),
            verdict: Verdict::Pass,
            constants: BTreeMap::new(),
            residuals: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn not_applicable(check: impl Into<String>, why: impl Into<String>) -> Self {
        let mut r = Self::new(check);
        r.verdict = Verdict::NotApplicable;
        r.notes.push(why.into());
        r
    }

    pub fn constant(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.constants.insert(name.into(), value.into());
    }

    /// Record a residual; a nonzero residual turns a passing report into a failure.
    pub fn residual(&mut self, name: impl Into<String>, value: impl Into<String>, is_zero: bool) {
        self.residuals.insert(name.into(), value.into());
        if !is_zero && self.verdict == Verdict::Pass {
            self.verdict = Verdict::Fail;
        }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.constants.get(name).map(String::as_str)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
