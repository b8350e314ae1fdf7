//! Result tables with an embedded run manifest.
//!
//! CSV output starts with `#`-prefixed header lines: the manifest and a
//! summary, each as one line of JSON. Numbers in the table are printed with
//! 17 significant digits so that reruns can be compared byte for byte.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::IoError;

const MANIFEST_PREFIX: &str = "# manifest: ";
const SUMMARY_PREFIX: &str = "# summary: ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Everything needed to regenerate a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Model path or `builtin:<name>` as given on the command line.
    pub model: String,
    pub model_sha256: String,
    pub kind: String,
    pub seed: Option<u64>,
    pub steps: Option<u64>,
    pub replicates: Option<u64>,
    pub checkpoints: Option<Vec<u64>>,
    pub renormalize: bool,
    pub format: Format,
    /// Arguments that rerun the command, excluding `--out`.
    pub argv: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Num(f64),
}

impl Cell {
    fn to_csv(self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => format_num(v),
        }
    }

    fn to_json(self) -> Value {
        match self {
            Cell::Int(v) => Value::from(v),
            Cell::Num(v) => Value::from(v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsFile {
    pub manifest: Manifest,
    pub summary: Value,
    pub table: Table,
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl ResultsFile {
    pub fn render(&self) -> String {
        match self.manifest.format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(MANIFEST_PREFIX);
        out.push_str(&serde_json::to_string(&self.manifest).expect("manifest serializes"));
        out.push('\n');
        out.push_str(SUMMARY_PREFIX);
        out.push_str(&serde_json::to_string(&self.summary).expect("summary serializes"));
        out.push('\n');
        out.push_str(&self.table.columns.join(","));
        out.push('\n');
        for row in &self.table.rows {
            let cells: Vec<String> = row.iter().map(|c| c.to_csv()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn render_json(&self) -> String {
        let rows: Vec<Value> = self
            .table
            .rows
            .iter()
            .map(|r| Value::Array(r.iter().map(|c| c.to_json()).collect()))
            .collect();
        let doc = serde_json::json!({
            "manifest": self.manifest,
            "summary": self.summary,
            "columns": self.table.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("results serialize");
        s.push('\n');
        s
    }
}

/// Extracts the manifest from a rendered results file (CSV or JSON).
pub fn parse_manifest(text: &str) -> Result<Manifest, IoError> {
    if text.trim_start().starts_with('{') {
        let doc: Value = serde_json::from_str(text).map_err(|e| IoError::Parse(e.to_string()))?;
        let m = doc
            .get("manifest")
            .cloned()
            .ok_or_else(|| IoError::Parse("results file has no manifest".into()))?;
        return serde_json::from_value(m).map_err(|e| IoError::Parse(e.to_string()));
    }
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix(MANIFEST_PREFIX))
        .ok_or_else(|| IoError::Parse("results file has no manifest line".into()))?;
    serde_json::from_str(line).map_err(|e| IoError::Parse(e.to_string()))
}

/// Writes `contents` to a temporary file next to `path`, then renames it.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    use std::io::Write;

    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| IoError::io(dir, e))?;
    tmp.write_all(contents.as_bytes())
        .map_err(|e| IoError::io(path, e))?;
    tmp.persist(path).map_err(|e| IoError::io(path, e.error))?;
    Ok(())
}
