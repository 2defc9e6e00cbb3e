//! Row-oriented output with a metadata header, written as CSV or JSON and
//! read back from either.
//!
//! CSV layout: `# key: value` lines, one header row, then records. Floats are
//! printed in Rust's shortest round-trip form, so parsing a file gives back
//! the exact values that were written.

use std::fmt;
use std::str::FromStr;

use serde_json::{json, Map, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Float(x) => Some(*x),
            _ => None,
        }
    }

    fn parse(raw: &str) -> Cell {
        if raw.is_empty() {
            return Cell::Empty;
        }
        if let Ok(i) = raw.parse::<i64>() {
            return Cell::Int(i);
        }
        match raw.parse::<f64>() {
            Ok(x) => Cell::Float(x),
            Err(_) => Cell::Text(raw.to_string()),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(i) => json!(i),
            Cell::Float(x) if x.is_finite() => json!(x),
            // JSON has no inf/NaN; keep the CSV spelling as a string
            Cell::Float(x) => json!(format!("{x:?}")),
            Cell::Text(s) => json!(s),
            Cell::Empty => Value::Null,
        }
    }

    fn from_json(v: &Value) -> Cell {
        match v {
            Value::Null => Cell::Empty,
            Value::Number(n) => match n.as_i64() {
                Some(i) if !n.is_f64() => Cell::Int(i),
                _ => Cell::Float(n.as_f64().unwrap_or(f64::NAN)),
            },
            Value::String(s) => Cell::parse(s),
            Value::Bool(b) => Cell::Text(b.to_string()),
            other => Cell::Text(other.to_string()),
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Int(i) => write!(f, "{i}"),
            // Debug keeps the trailing ".0" so floats never read back as ints
            Cell::Float(x) => write!(f, "{x:?}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Empty => Ok(()),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<u32> for Cell {
    fn from(i: u32) -> Self {
        Cell::Int(i64::from(i))
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self {
            metadata: Vec::new(),
            columns: columns.iter().map(|c| c.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl fmt::Display) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Rows shorter than the header are padded with empty cells.
    pub fn push(&mut self, mut row: Vec<Cell>) {
        assert!(row.len() <= self.columns.len(), "row wider than header");
        row.resize(self.columns.len(), Cell::Empty);
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of one column; non-numeric cells are skipped.
    pub fn floats(&self, name: &str) -> Vec<f64> {
        let Some(j) = self.column(name) else {
            return Vec::new();
        };
        self.rows.iter().filter_map(|r| r[j].as_f64()).collect()
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("writing to memory");
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string())).expect("writing to memory");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv output is utf-8"));
        out
    }

    pub fn to_json(&self) -> String {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (k, c) in self.columns.iter().zip(row) {
                    m.insert(k.clone(), c.to_json());
                }
                Value::Object(m)
            })
            .collect();
        let doc = json!({
            "metadata": self.metadata.iter().map(|(k, v)| json!([k, v])).collect::<Vec<_>>(),
            "columns": self.columns,
            "records": records,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str, format: Format) -> Result<Self, CliError> {
        match format {
            Format::Csv => Self::from_csv(text),
            Format::Json => Self::from_json(text),
        }
    }

    pub fn from_csv(text: &str) -> Result<Self, CliError> {
        let mut metadata = Vec::new();
        let mut body_start = 0;
        for line in text.split_inclusive('\n') {
            let Some(rest) = line.strip_prefix("# ") else {
                break;
            };
            let rest = rest.trim_end_matches(['\n', '\r']);
            let (k, v) = rest
                .split_once(": ")
                .ok_or_else(|| CliError::Parse(format!("metadata line without ': ' separator: {rest}")))?;
            metadata.push((k.to_string(), v.to_string()));
            body_start += line.len();
        }
        let mut reader = csv::Reader::from_reader(&text.as_bytes()[body_start..]);
        let columns =
            reader.headers().map_err(|e| CliError::Parse(e.to_string()))?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| CliError::Parse(e.to_string()))?;
            rows.push(rec.iter().map(Cell::parse).collect());
        }
        Ok(Self { metadata, columns, rows })
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let doc: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        let bad = |what: &str| CliError::Parse(format!("JSON table: {what}"));
        let metadata = doc["metadata"]
            .as_array()
            .ok_or_else(|| bad("missing metadata"))?
            .iter()
            .map(|pair| match (pair[0].as_str(), pair[1].as_str()) {
                (Some(k), Some(v)) => Ok((k.to_string(), v.to_string())),
                _ => Err(bad("metadata entries must be [key, value] strings")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        let columns: Vec<String> = doc["columns"]
            .as_array()
            .ok_or_else(|| bad("missing columns"))?
            .iter()
            .map(|c| c.as_str().map(str::to_string).ok_or_else(|| bad("column names must be strings")))
            .collect::<Result<_, _>>()?;
        let rows = doc["records"]
            .as_array()
            .ok_or_else(|| bad("missing records"))?
            .iter()
            .map(|r| columns.iter().map(|c| Cell::from_json(&r[c.as_str()])).collect())
            .collect();
        Ok(Self { metadata, columns, rows })
    }
}

impl FromStr for Table {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim_start().starts_with('{') {
            Self::from_json(s)
        } else {
            Self::from_csv(s)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["n", "x", "label", "gap"]);
        t.meta("tool", "hbac 0.1.0");
        t.meta("note", "a: b, c");
        t.push(vec![Cell::from(1usize), Cell::from(1.0), "plain".into(), Cell::Empty]);
        t.push(vec![Cell::from(2usize), Cell::from(0.1 + 0.2), "with, comma \"q\"".into(), Cell::from(f64::INFINITY)]);
        t.push(vec![Cell::from(3usize), Cell::from(-1.2345678901234567e-300)]);
        t
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = sample();
        let text = t.to_csv();
        assert_eq!(Table::from_csv(&text).unwrap(), t);
        assert_eq!(text.parse::<Table>().unwrap(), t);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let t = sample();
        let text = t.to_json();
        assert_eq!(Table::from_json(&text).unwrap(), t);
        assert_eq!(text.parse::<Table>().unwrap(), t);
    }

    #[test]
    fn floats_never_collapse_to_ints() {
        assert_eq!(Cell::from(2.0).to_string(), "2.0");
        assert_eq!(Cell::parse("2.0"), Cell::Float(2.0));
        assert_eq!(Cell::parse("2"), Cell::Int(2));
    }
}
