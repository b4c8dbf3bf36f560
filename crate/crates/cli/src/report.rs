//! Run reports. Every invocation emits exactly one, as JSON or as short
//! text; identical inputs produce identical reports except for the timing
//! field, which is therefore kept last.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct BudgetRecord {
    /// Node limit in force; absent means unlimited.
    pub limit: Option<u64>,
    /// Nodes actually visited, where the underlying search reports it.
    pub spent: Option<u64>,
}

#[derive(Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs: Vec<InputRecord>,
    pub parameters: BTreeMap<String, Value>,
    pub verdict: String,
    pub details: Value,
    pub budget: BudgetRecord,
    pub timing_ms: u128,
}

impl RunReport {
    pub fn render_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per leaf of the details tree, dotted keys, after a verdict
    /// line. Multi-line strings (DIMACS text) are indented instead.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}: {}", self.command, self.verdict);
        render_value(&mut out, "", &self.details);
        out
    }
}

fn render_value(out: &mut String, prefix: &str, v: &Value) {
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                render_value(out, &key, val);
            }
        }
        Value::String(s) if s.contains('\n') => {
            let _ = writeln!(out, "{prefix}:");
            for line in s.lines() {
                let _ = writeln!(out, "  {line}");
            }
        }
        other => {
            let _ = writeln!(out, "{prefix}: {other}");
        }
    }
}

pub struct Loaded {
    pub record: InputRecord,
    pub text: String,
}

pub fn load_input(path: &Path) -> Result<Loaded, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let sha256 = format!("{:x}", Sha256::digest(text.as_bytes()));
    Ok(Loaded {
        record: InputRecord {
            path: path.display().to_string(),
            sha256,
        },
        text,
    })
}
