//! Output files of a run, assembled in memory and written at the end so that
//! a collision is detected before anything is touched.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Bin,
}

/// Identifies the tool version, config and seed behind a file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(command: &str, config_sha256: &str, seed: Option<u64>) -> Self {
        Self {
            tool: "mechfringe".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_sha256: config_sha256.into(),
            seed,
        }
    }

    /// Comment lines for CSV headers, without the leading `#`.
    pub fn comment_lines(&self) -> Vec<String> {
        let seed = self.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        vec![
            format!("{} {} {}", self.tool, self.version, self.command),
            format!("config-sha256 {}", self.config_sha256),
            format!("seed {seed}"),
        ]
    }

    pub fn to_json(&self) -> Value {
        serde_json::to_value(self).expect("provenance serializes")
    }
}

#[derive(Debug, Default)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn names(&self) -> Vec<&str> {
        self.files.iter().map(|(n, _)| n.as_str()).collect()
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    /// JSON document with the provenance block first.
    pub fn add_json(&mut self, name: impl Into<String>, prov: &Provenance, body: Value) {
        let doc = json!({ "provenance": prov.to_json(), "data": body });
        let mut text = serde_json::to_string_pretty(&doc).expect("json serializes");
        text.push('\n');
        self.add(name, text.into_bytes());
    }

    /// Binary payload with a `<name>.meta.json` sidecar carrying provenance.
    pub fn add_binary(&mut self, name: impl Into<String>, prov: &Provenance, bytes: Vec<u8>, layout: &str) {
        let name = name.into();
        let meta = json!({ "provenance": prov.to_json(), "layout": layout });
        let mut text = serde_json::to_string_pretty(&meta).expect("json serializes");
        text.push('\n');
        self.add(format!("{name}.meta.json"), text.into_bytes());
        self.add(name, bytes);
    }

    pub fn write(&self, dir: &Path, overwrite: bool) -> CliResult<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let paths: Vec<PathBuf> = self.files.iter().map(|(n, _)| dir.join(n)).collect();
        if !overwrite {
            if let Some(p) = paths.iter().find(|p| p.exists()) {
                return Err(CliError::Io(format!("{} exists; pass --overwrite to replace it", p.display())));
            }
        }
        for (path, (_, bytes)) in paths.iter().zip(&self.files) {
            std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        }
        Ok(paths)
    }
}

/// Column table rendered as CSV with `#` provenance lines and 17
/// significant digits.
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn to_csv(&self, prov: &Provenance) -> Vec<u8> {
        let mut s = String::new();
        for line in prov.comment_lines() {
            let _ = writeln!(s, "# {line}");
        }
        let _ = writeln!(s, "{}", self.header.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s.into_bytes()
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let obj: serde_json::Map<String, Value> =
                    self.header.iter().cloned().zip(r.iter().map(Cell::json)).collect();
                Value::Object(obj)
            })
            .collect();
        Value::Array(rows)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(t) => t.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(t) => json!(t),
        }
    }
}
