//! Report envelope and rendering. Every report is built once as a JSON
//! value; the text form is a rendering of that same value.

use std::io::Write;
use std::path::Path;

use qubitbell::tol::Tolerances;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const SCHEMA: &str = "qubitbell-report/1";

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub role: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl InputRecord {
    pub fn file(path: &Path, bytes: &[u8]) -> Self {
        Self {
            role: "file".into(),
            path: Some(path.display().to_string()),
            builtin: None,
            sha256: Some(sha256_hex(bytes)),
        }
    }

    pub fn builtin(role: &str, name: &str) -> Self {
        Self {
            role: role.into(),
            path: None,
            builtin: Some(name.into()),
            sha256: None,
        }
    }

    pub fn with_role(mut self, role: &str) -> Self {
        self.role = role.into();
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<InputRecord>,
    pub version: String,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, inputs: Vec<InputRecord>, tolerances: Tolerances, seed: u64) -> Self {
        Self {
            command: command.into(),
            inputs,
            version: env!("CARGO_PKG_VERSION").into(),
            tolerances,
            seed,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }
}

/// `{schema, <body fields>, manifest}`.
pub fn envelope(body: Value, manifest: &RunManifest) -> Value {
    let mut out = Map::new();
    out.insert("schema".into(), json!(SCHEMA));
    if let Value::Object(fields) = body {
        out.extend(fields);
    }
    out.insert("manifest".into(), serde_json::to_value(manifest).expect("manifest serializes"));
    Value::Object(out)
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("none".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Array(items) if items.iter().all(|i| matches!(i, Value::Number(_))) => Some(format!(
            "[{}]",
            items.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(", ")
        )),
        _ => None,
    }
}

fn render_into(out: &mut String, v: &Value, indent: usize) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, item) in map {
                match scalar(item) {
                    Some(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_into(out, item, indent + 1);
                    }
                }
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                match scalar(item) {
                    Some(s) => out.push_str(&format!("{pad}- {s}\n")),
                    None => {
                        out.push_str(&format!("{pad}- [{i}]\n"));
                        render_into(out, item, indent + 1);
                    }
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", scalar(other).unwrap_or_default())),
    }
}

/// Indented `key: value` text carrying every field of the JSON form.
pub fn render_text(v: &Value) -> String {
    let mut out = String::new();
    render_into(&mut out, v, 0);
    out
}

/// Writes the report to standard output. A closed pipe is not an error.
pub fn emit(report: &Value, as_json: bool) {
    let text = if as_json {
        serde_json::to_string_pretty(report).expect("report serializes") + "\n"
    } else {
        render_text(report)
    };
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_rendering_keeps_every_field() {
        let v = json!({"a": 1, "b": {"c": [1.5, 2], "d": [{"e": true}]}, "f": null});
        assert_eq!(
            render_text(&v),
            "a: 1\nb:\n  c: [1.5, 2]\n  d:\n    - [0]\n      e: true\nf: none\n"
        );
    }

    #[test]
    fn digest_is_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
