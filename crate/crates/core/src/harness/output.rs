use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::Result;
use crate::numeric::fmt17;

/// A float cell: 17 significant digits, or `inf`/`-inf`/`nan`.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        fmt17(x)
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Rows of already formatted cells under a fixed header.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        Ok(w.into_inner().map_err(|e| e.into_error())?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        Ok(fs::write(path, self.to_bytes()?)?)
    }
}

fn precise(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("checked float");
            Value::Number(Number::from_str(&fmt17(x)).expect("fmt17 emits valid JSON numbers"))
        }
        Value::Array(items) => Value::Array(items.into_iter().map(precise).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, precise(v))).collect()),
        other => other,
    }
}

/// Pretty JSON with every float written to 17 significant digits.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(&precise(serde_json::to_value(value)?))?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    Ok(fs::write(path, json_bytes(value)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        x: f64,
        n: u64,
        tag: &'static str,
        nested: Vec<f64>,
        missing: f64,
    }

    #[test]
    fn json_floats_carry_seventeen_digits() {
        let text = String::from_utf8(
            json_bytes(&Sample {
                x: 0.1,
                n: 3,
                tag: "a",
                nested: vec![1.0, -2.5e-7],
                missing: f64::NAN,
            })
            .unwrap(),
        )
        .unwrap();
        assert!(text.contains("\"x\": 1.0000000000000001e-1"), "{text}");
        assert!(text.contains("\"n\": 3"));
        assert!(text.contains("-2.4999999999999999e-7"));
        assert!(text.find("\"x\"").unwrap() < text.find("\"n\"").unwrap());
        assert!(text.contains("\"missing\": null"));
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
    }

    #[test]
    fn csv_quotes_coordinates() {
        let mut t = CsvTable::new(&["edge", "value"]);
        t.push(vec!["(0,1)-(1,1)".into(), float(0.5)]);
        t.push(vec!["(1)-(2)".into(), float(f64::INFINITY)]);
        let text = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(text, "edge,value\n\"(0,1)-(1,1)\",5.0000000000000000e-1\n(1)-(2),inf\n");
    }
}
