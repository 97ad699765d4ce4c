//! Tabular results and their CSV, JSON and plot-data renderings.

use std::fmt::Write as _;

use serde_json::{Map, Value, json};

use crate::format::{Metadata, format_coeff};

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Num(v) => format_coeff(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(v) => json!(v.to_string()),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
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
        Cell::Text(v.to_string())
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

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Table {
        Table { name: name.into(), columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }
    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
    /// Numeric column by name.
    pub fn column(&self, name: &str) -> Vec<f64> {
        let Some(j) = self.columns.iter().position(|c| c == name) else { return Vec::new() };
        self.rows
            .iter()
            .map(|r| match &r[j] {
                Cell::Num(v) => *v,
                Cell::Int(v) => *v as f64,
                Cell::Text(s) => s.parse().unwrap_or(f64::NAN),
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Emit {
    Csv,
    Json,
    Plotdata,
}

impl Emit {
    pub fn extension(self) -> &'static str {
        match self {
            Emit::Csv => "csv",
            Emit::Json => "json",
            Emit::Plotdata => "dat",
        }
    }
}

/// Result of a command: the configuration echo, tables, notes and self-check violations.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub title: String,
    pub echo: Metadata,
    pub config_hash: u64,
    pub tables: Vec<Table>,
    pub notes: Vec<String>,
    pub violations: Vec<String>,
}

impl Report {
    pub fn new(title: &str, echo: Metadata, config_hash: u64) -> Report {
        Report { title: title.into(), echo, config_hash, tables: Vec::new(), notes: Vec::new(), violations: Vec::new() }
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    fn header(&self, out: &mut String, prefix: &str) {
        let _ = writeln!(out, "{prefix} {}", self.title);
        let _ = writeln!(out, "{prefix} config_hash = {:016x}", self.config_hash);
        for (k, v) in &self.echo {
            let _ = writeln!(out, "{prefix} {k} = {v}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "{prefix} note: {n}");
        }
        for v in &self.violations {
            let _ = writeln!(out, "{prefix} VIOLATION: {v}");
        }
    }

    pub fn render(&self, emit: Emit) -> String {
        match emit {
            Emit::Csv => self.to_csv(),
            Emit::Json => self.to_json(),
            Emit::Plotdata => self.to_plotdata(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        self.header(&mut out, "#");
        for t in &self.tables {
            let _ = writeln!(out, "# table: {}", t.name);
            let _ = writeln!(out, "{}", t.columns.join(","));
            for r in &t.rows {
                let _ = writeln!(out, "{}", r.iter().map(|c| csv_field(&c.text())).collect::<Vec<_>>().join(","));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_plotdata(&self) -> String {
        let mut out = String::new();
        self.header(&mut out, "#");
        for t in &self.tables {
            let _ = writeln!(out, "# table: {}", t.name);
            let _ = writeln!(out, "# {}", t.columns.join(" "));
            for r in &t.rows {
                let _ = writeln!(out, "{}", r.iter().map(|c| c.text().replace(' ', "_")).collect::<Vec<_>>().join(" "));
            }
            out.push_str("\n\n");
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut cfg = Map::new();
        for (k, v) in &self.echo {
            cfg.insert(k.clone(), json!(v));
        }
        let tables: Vec<Value> = self
            .tables
            .iter()
            .map(|t| {
                let rows: Vec<Value> = t
                    .rows
                    .iter()
                    .map(|r| {
                        let mut o = Map::new();
                        for (c, v) in t.columns.iter().zip(r) {
                            o.insert(c.clone(), v.json());
                        }
                        Value::Object(o)
                    })
                    .collect();
                json!({ "name": t.name, "columns": t.columns, "rows": rows })
            })
            .collect();
        let doc = json!({
            "title": self.title,
            "config_hash": format!("{:016x}", self.config_hash),
            "constants_fingerprint": self.echo.get("constants_fingerprint"),
            "config": Value::Object(cfg),
            "notes": self.notes,
            "violations": self.violations,
            "tables": tables,
        });
        let mut s = serde_json::to_string_pretty(&doc).unwrap_or_default();
        s.push('\n');
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) { format!("\"{}\"", s.replace('"', "\"\"")) } else { s.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("demo", Metadata::from([("constants_fingerprint".to_string(), "abc".to_string())]), 7);
        let mut t = Table::new("t", &["x", "label"]);
        t.push(vec![1.5.into(), "a,b".into()]);
        t.push(vec![f64::INFINITY.into(), "c".into()]);
        r.tables.push(t);
        r
    }

    #[test]
    fn renders_all_formats() {
        let r = sample();
        let csv = r.to_csv();
        assert!(csv.contains("config_hash = 0000000000000007"));
        assert!(csv.contains("\"a,b\""));
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["constants_fingerprint"], "abc");
        assert_eq!(v["tables"][0]["rows"][0]["x"], 1.5);
        assert!(r.to_plotdata().contains("# x label"));
        assert_eq!(r.tables[0].column("x")[0], 1.5);
    }
}
