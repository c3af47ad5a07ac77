use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use mpr_core::Verdict;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::RunConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryEntry {
    pub check: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: RunConfig,
    pub exit_code: i32,
    pub reports: Vec<SummaryEntry>,
}

/// 1 on any failure, else 2 on any degenerate verdict, else 0.
pub fn exit_code<'a>(verdicts: impl IntoIterator<Item = &'a Verdict>) -> i32 {
    let v: Vec<&Verdict> = verdicts.into_iter().collect();
    if v.iter().any(|x| **x == Verdict::Fail) {
        1
    } else if v.iter().any(|x| **x == Verdict::Degenerate) {
        2
    } else {
        0
    }
}

pub fn slug(name: &str) -> String {
    let mut s = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() || c == '-' {
            s.push(c.to_ascii_lowercase());
        } else if !s.ends_with('_') {
            s.push('_');
        }
    }
    s.trim_matches('_').to_string()
}

/// `value` as a JSON object with `config` attached.
pub fn with_config<T: Serialize>(value: &T, config: &RunConfig) -> Value {
    let mut v = serde_json::to_value(value).expect("serializable");
    let cfg = serde_json::to_value(config).expect("serializable");
    match v.as_object_mut() {
        Some(obj) => {
            obj.insert("config".into(), cfg);
            v
        }
        None => serde_json::json!({ "value": v, "config": cfg }),
    }
}

/// Collects reports, writes them under `out` (if any) and prints the table.
pub struct Bundle {
    pub config: RunConfig,
    out: Option<PathBuf>,
    used: BTreeSet<String>,
    pub entries: Vec<SummaryEntry>,
}

impl Bundle {
    pub fn new(config: RunConfig) -> std::io::Result<Self> {
        let out = config.out.as_ref().map(PathBuf::from);
        if let Some(dir) = &out {
            fs::create_dir_all(dir)?;
        }
        Ok(Bundle { config, out, used: BTreeSet::new(), entries: Vec::new() })
    }

    pub fn add<T: Serialize>(&mut self, check: &str, verdict: Verdict, detail: String, body: &T) -> std::io::Result<()> {
        let file = match &self.out {
            None => None,
            Some(dir) => {
                let base = slug(check);
                let mut name = format!("{base}.json");
                let mut k = 2;
                while self.used.contains(&name) || name == "summary.json" {
                    name = format!("{base}_{k}.json");
                    k += 1;
                }
                self.used.insert(name.clone());
                let mut v = with_config(body, &self.config);
                let obj = v.as_object_mut().expect("object");
                obj.entry("check").or_insert_with(|| Value::from(check));
                obj.entry("verdict").or_insert_with(|| Value::from(verdict.as_str()));
                write_json(&dir.join(&name), &v)?;
                Some(name)
            }
        };
        self.entries.push(SummaryEntry { check: check.into(), verdict, detail, file });
        Ok(())
    }

    pub fn exit_code(&self) -> i32 {
        exit_code(self.entries.iter().map(|e| &e.verdict))
    }

    /// Write `summary.json` and print the table; returns the exit code.
    pub fn finish(self, stdout: &mut dyn Write) -> std::io::Result<i32> {
        let code = self.exit_code();
        let summary = Summary { config: self.config, exit_code: code, reports: self.entries };
        if let Some(dir) = &self.out {
            write_json(&dir.join("summary.json"), &serde_json::to_value(&summary).expect("serializable"))?;
        }
        print_table(&summary.reports, stdout)?;
        writeln!(stdout, "exit {code}")?;
        Ok(code)
    }
}

pub fn write_json(path: &Path, v: &Value) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(v).expect("serializable");
    text.push('\n');
    fs::write(path, text)
}

pub fn print_table(entries: &[SummaryEntry], out: &mut dyn Write) -> std::io::Result<()> {
    let w = entries.iter().map(|e| e.check.chars().count()).max().unwrap_or(5).max(5);
    writeln!(out, "{:<w$}  {:<14}  detail", "check", "verdict")?;
    for e in entries {
        writeln!(out, "{:<w$}  {:<14}  {}", e.check, e.verdict.as_str(), e.detail)?;
    }
    Ok(())
}
