use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use serde_json::{json, Value};

/// Float with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text with a header row.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, values: impl IntoIterator<Item = String>) {
        let line: Vec<String> = values.into_iter().collect();
        writeln!(self.text, "{}", line.join(",")).expect("writing to a String");
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// What a command produced: the output file body and a short summary for the manifest.
pub struct Product {
    pub body: String,
    pub summary: Value,
    /// Set when the run finished but its result is not trustworthy.
    pub failure: Option<String>,
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn write_output(path: &Path, body: &str) -> anyhow::Result<()> {
    fs::write(path, body).with_context(|| format!("writing {}", path.display()))
}

pub fn write_manifest(output: &Path, config: &Value, status: &str, reason: Option<&str>, summary: Value) -> anyhow::Result<()> {
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let manifest = json!({
        "config": config,
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp": timestamp,
        "status": status,
        "reason": reason,
        "summary": summary,
    });
    let path = manifest_path(output);
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").with_context(|| format!("writing {}", path.display()))
}
