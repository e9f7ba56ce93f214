//! Tabular output as CSV (17 significant digits) or JSON.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
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

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_nan() => "NaN".into(),
            Cell::Num(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Bool(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width for table {}", self.name);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write<W: Write>(&self, w: W, format: Format) -> Result<()> {
        match format {
            Format::Csv => {
                let mut wr = csv::Writer::from_writer(w);
                let err = |e: csv::Error| CliError::Output(e.to_string());
                wr.write_record(&self.columns).map_err(err)?;
                for row in &self.rows {
                    wr.write_record(row.iter().map(Cell::csv)).map_err(err)?;
                }
                wr.flush().map_err(|e| CliError::Output(e.to_string()))
            }
            Format::Json => {
                let doc = json!({
                    "name": self.name,
                    "columns": self.columns,
                    "rows": self.rows.iter().map(|r| r.iter().map(Cell::json).collect::<Vec<_>>()).collect::<Vec<_>>(),
                });
                let mut w = w;
                serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| CliError::Output(e.to_string()))?;
                writeln!(w).map_err(|e| CliError::Output(e.to_string()))
            }
        }
    }
}

/// Where table `index` of a run goes: the first to `out` itself, the rest
/// next to it as `<stem>_<name>.<ext>`.
pub fn table_path(out: &Path, table: &Table, index: usize, format: Format) -> PathBuf {
    if index == 0 {
        return out.to_path_buf();
    }
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = out.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| format.extension().into());
    out.with_file_name(format!("{stem}_{}.{ext}", table.name))
}

/// Writes every table to files derived from `out`, or to stdout.
pub fn write_tables(tables: &[Table], out: Option<&Path>, format: Format) -> Result<Vec<PathBuf>> {
    match out {
        Some(out) => {
            let mut written = Vec::with_capacity(tables.len());
            for (i, t) in tables.iter().enumerate() {
                let path = table_path(out, t, i, format);
                let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
                t.write(io::BufWriter::new(file), format)?;
                written.push(path);
            }
            Ok(written)
        }
        None => {
            let stdout = io::stdout();
            for (i, t) in tables.iter().enumerate() {
                let mut lock = stdout.lock();
                if tables.len() > 1 {
                    if i > 0 {
                        writeln!(lock).map_err(|e| CliError::Output(e.to_string()))?;
                    }
                    writeln!(lock, "# {}", t.name).map_err(|e| CliError::Output(e.to_string()))?;
                }
                t.write(lock, format)?;
            }
            Ok(Vec::new())
        }
    }
}
