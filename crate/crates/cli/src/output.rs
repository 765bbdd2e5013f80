//! Tables with a metadata header, written as CSV or JSON lines.

use std::io::{self, Write};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Table {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Header block: everything needed to reproduce the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub mode: String,
    pub version: String,
    pub seeds: Vec<u64>,
    pub wall_time_s: f64,
    /// Effective configuration as a single JSON line.
    pub config_json: String,
    pub summary: Vec<String>,
}

/// 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn csv_field(c: &Cell) -> String {
    match c {
        Cell::Float(v) => format_float(*v),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
        Cell::Empty => String::new(),
    }
}

pub fn write_csv<W: Write>(out: &mut W, meta: &Metadata, table: &Table) -> io::Result<()> {
    writeln!(out, "# cldyn {}", meta.version)?;
    writeln!(out, "# mode: {}", meta.mode)?;
    let seeds: Vec<String> = meta.seeds.iter().map(u64::to_string).collect();
    writeln!(out, "# seeds: {}", seeds.join(" "))?;
    writeln!(out, "# wall_time_s: {:.3}", meta.wall_time_s)?;
    writeln!(out, "# config: {}", meta.config_json)?;
    for line in &meta.summary {
        writeln!(out, "# summary: {line}")?;
    }
    writeln!(out, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let fields: Vec<String> = row.iter().map(csv_field).collect();
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

fn json_value(c: &Cell) -> serde_json::Value {
    match c {
        Cell::Float(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into),
        Cell::Int(v) => (*v).into(),
        Cell::Text(s) => s.clone().into(),
        Cell::Empty => serde_json::Value::Null,
    }
}

/// First line `{"meta": ...}`, then one object per row.
pub fn write_jsonl<W: Write>(out: &mut W, meta: &Metadata, table: &Table) -> io::Result<()> {
    let config: serde_json::Value = serde_json::from_str(&meta.config_json).unwrap_or(serde_json::Value::Null);
    let header = serde_json::json!({
        "meta": {
            "version": meta.version,
            "mode": meta.mode,
            "seeds": meta.seeds,
            "wall_time_s": meta.wall_time_s,
            "config": config,
            "summary": meta.summary,
        }
    });
    writeln!(out, "{header}")?;
    for row in &table.rows {
        let obj: serde_json::Map<String, serde_json::Value> =
            table.columns.iter().cloned().zip(row.iter().map(json_value)).collect();
        writeln!(out, "{}", serde_json::Value::Object(obj))?;
    }
    Ok(())
}
