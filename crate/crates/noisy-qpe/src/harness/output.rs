//! Result rows and their CSV / JSON encodings.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::config::{OutputFormat, SweepConfig};
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(u64),
    Float(f64),
    Text(String),
    Missing,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) if v.is_nan() => "nan".into(),
            Cell::Float(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Missing => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(v) => json!(v.to_string()),
            Cell::Text(s) => json!(s),
            Cell::Missing => Value::Null,
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Missing, Into::into)
    }
}

/// A self-describing output row. Column names carry their units.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub fields: Vec<(String, Cell)>,
    pub trials: u64,
    /// `None` when undefined, e.g. for a single trial.
    pub std_error: Option<f64>,
    pub warning: Option<String>,
    pub error: Option<String>,
}

impl ResultRow {
    pub fn new(experiment: impl Into<String>, trials: u64) -> Self {
        ResultRow {
            experiment: experiment.into(),
            fields: Vec::new(),
            trials,
            std_error: None,
            warning: None,
            error: None,
        }
    }

    pub fn with(mut self, name: &str, value: impl Into<Cell>) -> Self {
        self.fields.push((name.to_string(), value.into()));
        self
    }

    pub fn std_error(mut self, se: f64) -> Self {
        self.std_error = (se.is_finite() && se >= 0.0).then_some(se);
        self
    }

    pub fn get(&self, name: &str) -> Option<&Cell> {
        self.fields.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn float(&self, name: &str) -> Option<f64> {
        match self.get(name)? {
            Cell::Float(v) => Some(*v),
            Cell::Int(v) => Some(*v as f64),
            _ => None,
        }
    }
}

fn columns(rows: &[ResultRow]) -> Vec<String> {
    let mut cols: Vec<String> = Vec::new();
    for r in rows {
        for (n, _) in &r.fields {
            if !cols.contains(n) {
                cols.push(n.clone());
            }
        }
    }
    cols
}

/// CSV text with a leading schema comment. Rows missing a column leave it empty.
pub fn to_csv(rows: &[ResultRow]) -> Result<String> {
    let cols = columns(rows);
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let mut header = vec!["experiment".to_string()];
    header.extend(cols.iter().cloned());
    header.extend(["trials", "std_error", "warning", "error"].map(String::from));
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.experiment.clone()];
        for c in &cols {
            rec.push(r.get(c).map_or(String::new(), Cell::csv));
        }
        rec.push(r.trials.to_string());
        rec.push(r.std_error.map_or("undefined".into(), |v| v.to_string()));
        rec.push(r.warning.clone().unwrap_or_default());
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec).map_err(csv_err)?;
    }
    let body = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    let mut out = format!("# schema-version: {SCHEMA_VERSION}\n");
    out.push_str(&String::from_utf8(body).map_err(|e| Error::Internal(e.to_string()))?);
    Ok(out)
}

pub fn to_json(rows: &[ResultRow]) -> Result<String> {
    let items: Vec<Value> = rows
        .iter()
        .map(|r| {
            let mut m = Map::new();
            m.insert("experiment".into(), json!(r.experiment));
            for (n, c) in &r.fields {
                m.insert(n.clone(), c.json());
            }
            m.insert("trials".into(), json!(r.trials));
            m.insert("std_error".into(), r.std_error.map_or(Value::Null, |v| json!(v)));
            m.insert("warning".into(), r.warning.clone().map_or(Value::Null, Value::String));
            m.insert("error".into(), r.error.clone().map_or(Value::Null, Value::String));
            Value::Object(m)
        })
        .collect();
    let doc = json!({ "schema_version": SCHEMA_VERSION, "rows": items });
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Internal(e.to_string()))
}

pub fn render(rows: &[ResultRow], format: OutputFormat) -> Result<String> {
    match format {
        OutputFormat::Csv => to_csv(rows),
        OutputFormat::Json => to_json(rows),
    }
}

/// `out.csv` → `out.csv.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Metadata echoed next to every result file. Contains no timestamps so that
/// reruns stay byte-identical.
pub fn metadata(config: &SweepConfig, rows: usize) -> Result<String> {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "generator": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.seed,
        "rows": rows,
        "config": config,
    });
    serde_json::to_string_pretty(&doc).map_err(|e| Error::Internal(e.to_string()))
}

/// Write the rendered rows and the sidecar; returns the two paths.
pub fn write_results(rows: &[ResultRow], config: &SweepConfig, out: &Path) -> Result<(PathBuf, PathBuf)> {
    let body = render(rows, config.format)?;
    std::fs::File::create(out)?.write_all(body.as_bytes())?;
    let meta = sidecar_path(out);
    std::fs::write(&meta, metadata(config, rows.len())?)?;
    Ok((out.to_path_buf(), meta))
}
