//! JSON file formats for sets and refinement traces, and the record printer
//! used by the command-line tool.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{ElementSet, FiniteAbelianGroup, GroupElement};
use crate::refine::{AuditReport, BoundReport, RefineConfig, RefineResult};

fn malformed(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Malformed {
        field: field.into(),
        message: message.into(),
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| {
        malformed(
            format!("line {} column {}", e.line(), e.column()),
            e.to_string(),
        )
    })
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// A set of group elements on disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetFile {
    pub orders: Vec<usize>,
    /// Coordinate vectors, ascending by encoded index.
    pub elements: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl SetFile {
    pub fn from_set(set: &ElementSet, name: Option<String>, seed: Option<u64>) -> Self {
        Self {
            orders: set.group().orders().to_vec(),
            elements: set.elements().into_iter().map(|e| e.0).collect(),
            name,
            seed,
        }
    }

    /// Validates every element and rebuilds the set.
    pub fn to_set(&self) -> Result<ElementSet> {
        let group = FiniteAbelianGroup::new(&self.orders)
            .map_err(|e| malformed("orders", e.to_string()))?;
        let mut seen = BTreeSet::new();
        for (k, e) in self.elements.iter().enumerate() {
            let index = group
                .encode(&GroupElement(e.clone()))
                .map_err(|err| malformed(format!("elements[{k}]"), err.to_string()))?;
            if !seen.insert(index) {
                return Err(malformed(
                    format!("elements[{k}]"),
                    format!("duplicate element {e:?}"),
                ));
            }
        }
        ElementSet::from_indices(&group, seen)
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }
}

/// A refinement run with everything needed to re-audit it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFile {
    pub config: RefineConfig,
    pub result: RefineResult,
    pub audit: AuditReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundReport>,
}

impl TraceFile {
    pub fn parse(text: &str) -> Result<Self> {
        parse_json(text)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(self, path)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Int(i64),
    Float(f64),
    Bool(bool),
    Text(String),
}

impl From<usize> for Value {
    fn from(v: usize) -> Self {
        Value::Int(v as i64)
    }
}

impl From<u64> for Value {
    fn from(v: u64) -> Self {
        Value::Int(v as i64)
    }
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Float(v)
    }
}

impl From<bool> for Value {
    fn from(v: bool) -> Self {
        Value::Bool(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

impl From<String> for Value {
    fn from(v: String) -> Self {
        Value::Text(v)
    }
}

impl Value {
    fn text(&self) -> String {
        match self {
            Value::Int(v) => v.to_string(),
            Value::Float(v) => round_sig(*v).to_string(),
            Value::Bool(v) => v.to_string(),
            Value::Text(v) => v.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Value::Int(v) => (*v).into(),
            Value::Float(v) => serde_json::Number::from_f64(round_sig(*v))
                .map_or(serde_json::Value::Null, serde_json::Value::Number),
            Value::Bool(v) => (*v).into(),
            Value::Text(v) => v.clone().into(),
        }
    }
}

/// One flat output record: a kind tag and ordered fields.
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub kind: String,
    pub fields: Vec<(String, Value)>,
}

impl Record {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            fields: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.fields.push((key.to_string(), value.into()));
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders records, one per line. CSV starts a new header whenever the
/// record shape changes.
pub fn render(records: &[Record], format: Format) -> String {
    let mut out = String::new();
    let mut last_header: Option<Vec<String>> = None;
    for r in records {
        match format {
            Format::Json => {
                let mut map = serde_json::Map::new();
                map.insert("record".into(), r.kind.clone().into());
                for (k, v) in &r.fields {
                    map.insert(k.clone(), v.json());
                }
                let _ = writeln!(out, "{}", serde_json::Value::Object(map));
            }
            Format::Csv => {
                let header: Vec<String> = std::iter::once("record".to_string())
                    .chain(r.fields.iter().map(|(k, _)| k.clone()))
                    .collect();
                if last_header.as_ref() != Some(&header) {
                    let _ = writeln!(
                        out,
                        "{}",
                        header
                            .iter()
                            .map(|h| csv_cell(h))
                            .collect::<Vec<_>>()
                            .join(",")
                    );
                    last_header = Some(header);
                }
                let row: Vec<String> = std::iter::once(csv_cell(&r.kind))
                    .chain(r.fields.iter().map(|(_, v)| csv_cell(&v.text())))
                    .collect();
                let _ = writeln!(out, "{}", row.join(","));
            }
            Format::Text => {
                let _ = write!(out, "{}", r.kind);
                for (k, v) in &r.fields {
                    let _ = write!(out, " {k}={}", v.text());
                }
                out.push('\n');
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::random_subset;

    #[test]
    fn set_file_round_trip() {
        let g = FiniteAbelianGroup::new(&[3, 4]).unwrap();
        let a = random_subset(&g, 5, 1).unwrap();
        let f = SetFile::from_set(&a, Some("x".into()), Some(1));
        let text = serde_json::to_string_pretty(&f).unwrap();
        let back = SetFile::parse(&text).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_set().unwrap(), a);
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
    }

    #[test]
    fn malformed_sets_name_the_field() {
        let bad = r#"{"orders":[2,2],"elements":[[0,0],[1,2]]}"#;
        match SetFile::parse(bad).unwrap().to_set() {
            Err(Error::Malformed { field, .. }) => assert_eq!(field, "elements[1]"),
            other => panic!("{other:?}"),
        }
        let dup = r#"{"orders":[2,2],"elements":[[1,0],[1,0]]}"#;
        assert!(matches!(
            SetFile::parse(dup).unwrap().to_set(),
            Err(Error::Malformed { .. })
        ));
        match SetFile::parse("{\n \"orders\": [2,\n") {
            Err(Error::Malformed { field, .. }) => assert!(field.starts_with("line ")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn significant_digits() {
        assert_eq!(round_sig(1.0 / 3.0).to_string(), "0.333333333333");
        assert_eq!(round_sig(2.0), 2.0);
        let r = vec![Record::new("x").with("a", 1usize).with("b", 0.5)];
        assert_eq!(render(&r, Format::Text), "x a=1 b=0.5\n");
        assert_eq!(render(&r, Format::Csv), "record,a,b\nx,1,0.5\n");
        assert_eq!(
            render(&r, Format::Json),
            "{\"a\":1,\"b\":0.5,\"record\":\"x\"}\n"
        );
    }
}
