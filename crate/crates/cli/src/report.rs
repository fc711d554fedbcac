//! Tabular reports written as CSV or versioned JSON.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::CliError;

pub const SCHEMA_VERSION: &str = "1";

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Flag(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}
impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}
impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}
impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}
impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Flag(v)
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

impl Cell {
    /// Numbers use the shortest representation that round-trips.
    fn to_csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Flag(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(Value::Null, Value::Number),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Flag(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

/// A named table with run metadata.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub meta: Vec<(&'static str, Cell)>,
}

impl Table {
    pub fn new(name: &str, columns: &[&'static str]) -> Self {
        Table { name: name.to_string(), columns: columns.to_vec(), rows: Vec::new(), meta: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    pub fn meta(&mut self, key: &'static str, v: impl Into<Cell>) {
        self.meta.push((key, v.into()));
    }

    pub fn render(&self, command: &str, format: Format) -> Result<String, CliError> {
        if let Some(bad) = self.rows.iter().find(|r| r.len() != self.columns.len()) {
            return Err(CliError::Io(format!(
                "table {}: row of width {} for {} columns",
                self.name,
                bad.len(),
                self.columns.len()
            )));
        }
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns).map_err(CliError::from_csv)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::to_csv)).map_err(CliError::from_csv)?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
                String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let obj: Map<String, Value> =
                            self.columns.iter().zip(r).map(|(c, v)| (c.to_string(), v.to_json())).collect();
                        Value::Object(obj)
                    })
                    .collect();
                let meta: Map<String, Value> = self.meta.iter().map(|(k, v)| (k.to_string(), v.to_json())).collect();
                let doc = json!({
                    "schema_version": SCHEMA_VERSION,
                    "command": command,
                    "table": self.name,
                    "meta": meta,
                    "columns": self.columns,
                    "rows": rows,
                });
                let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
        }
    }

    /// Writes `<dir>/<name>.<ext>` and returns the path.
    pub fn write(&self, dir: &Path, command: &str, format: Format) -> Result<PathBuf, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let ext = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        let path = dir.join(format!("{}.{ext}", self.name));
        fs::write(&path, self.render(command, format)?)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_rendering() {
        let mut t = Table::new("demo", &["cell", "value", "flag", "missing"]);
        t.push(vec!["a/b".into(), 0.0235.into(), true.into(), Cell::Empty]);
        t.push(vec!["c,d".into(), f64::NAN.into(), false.into(), 3usize.into()]);
        t.meta("seed", 7u64);
        let csv = t.render("stats", Format::Csv).unwrap();
        assert_eq!(csv, "cell,value,flag,missing\na/b,0.0235,true,\n\"c,d\",NaN,false,3\n");
        let json: Value = serde_json::from_str(&t.render("stats", Format::Json).unwrap()).unwrap();
        assert_eq!(json["schema_version"], "1");
        assert_eq!(json["rows"][0]["value"], 0.0235);
        assert!(json["rows"][1]["value"].is_null());
        assert_eq!(json["meta"]["seed"], 7);
    }
}
