//! CSV tables with JSON schema sidecars, and JSON summaries.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

/// Column of an output table.
pub struct Column {
    pub name: String,
    pub kind: &'static str,
    pub description: String,
}

pub fn col(name: impl Into<String>, kind: &'static str, description: impl Into<String>) -> Column {
    Column { name: name.into(), kind, description: description.into() }
}

/// A table buffered in memory and written in one piece.
pub struct Table {
    name: String,
    columns: Vec<Column>,
    rows: Vec<Vec<String>>,
}

/// Shortest round-trip representation; `NaN`/`inf` spelled out.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:?}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl Table {
    pub fn new(name: &str, columns: Vec<Column>) -> Self {
        Table { name: name.to_string(), columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width for {}", self.name);
        self.rows.push(row);
    }

    pub fn write(&self, dir: &Path) -> io::Result<PathBuf> {
        let path = dir.join(format!("{}.csv", self.name));
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&path)?;
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        let schema = json!({
            "file": format!("{}.csv", self.name),
            "delimiter": ",",
            "header": true,
            "columns": self.columns.iter().map(|c| json!({
                "name": c.name,
                "type": c.kind,
                "description": c.description,
            })).collect::<Vec<_>>(),
        });
        write_json(&dir.join(format!("{}.schema.json", self.name)), &schema)?;
        Ok(path)
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

/// Run summary: command, config echo and versions, plus command results.
pub fn summary(command: &str, config: Value, results: Value) -> Value {
    json!({
        "command": command,
        "config": config,
        "versions": {
            "wiener-chaos": env!("CARGO_PKG_VERSION"),
            "rng": "ChaCha8, stream per draw keyed by (seed, tag)",
        },
        "results": results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e300] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(num(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn table_writes_csv_and_schema() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = Table::new("t", vec![col("a", "int", "first"), col("b", "string", "second")]);
        t.push(vec!["1".into(), "x,y".into()]);
        t.write(dir.path()).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("t.csv")).unwrap(), "a,b\n1,\"x,y\"\n");
        let schema: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("t.schema.json")).unwrap()).unwrap();
        assert_eq!(schema["columns"][1]["type"], "string");
    }
}
