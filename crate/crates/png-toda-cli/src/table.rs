//! Deterministic tabular output: CSV (default) or JSON lines, always led by
//! a provenance header. Same config and seed give byte-identical files.

use std::io::Write;

use anyhow::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format!("{v:.12e}"),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => serde_json::json!(v),
            Cell::Float(v) => serde_json::json!(v),
            Cell::Text(s) => serde_json::json!(s),
            Cell::Bool(b) => serde_json::json!(b),
        }
    }
}

pub struct Table {
    /// Provenance entries (tool version, revision, seed, tolerances).
    pub provenance: Vec<(String, String)>,
    /// Column names; annotate units or tolerances in the name itself.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &str, extras: &[(&str, String)], columns: &[&str]) -> Table {
        let mut provenance = vec![
            (
                "tool".to_string(),
                format!("png-toda {}", env!("CARGO_PKG_VERSION")),
            ),
            ("rev".to_string(), git_revision()),
            ("command".to_string(), command.to_string()),
        ];
        for (k, v) in extras {
            provenance.push((k.to_string(), v.clone()));
        }
        Table {
            provenance,
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, out: &mut dyn Write, format: Format) -> Result<()> {
        match format {
            Format::Csv => {
                for (k, v) in &self.provenance {
                    writeln!(out, "# {k}={v}")?;
                }
                writeln!(out, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::csv).collect();
                    writeln!(out, "{}", cells.join(","))?;
                }
            }
            Format::Jsonl => {
                let meta: serde_json::Map<String, serde_json::Value> = self
                    .provenance
                    .iter()
                    .map(|(k, v)| (k.clone(), serde_json::json!(v)))
                    .collect();
                writeln!(out, "{}", serde_json::json!({ "provenance": meta }))?;
                for row in &self.rows {
                    let obj: serde_json::Map<String, serde_json::Value> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, cell)| (c.clone(), cell.json()))
                        .collect();
                    writeln!(out, "{}", serde_json::Value::Object(obj))?;
                }
            }
        }
        Ok(())
    }
}

fn git_revision() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "--short", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}

/// Joins multi-point values into one cell, `;`-separated.
pub fn join_list<T: std::fmt::Display>(values: &[T]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}
