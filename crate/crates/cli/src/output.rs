//! Serialisation of results. Floats use the shortest decimal form that
//! parses back to the same `f64`, so files are byte-stable and lossless.

use std::io::Write;
use std::path::{Path, PathBuf};

use bmv_core::witness::MeasurementRecord;
use serde_json::{Map, Value};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("cannot write {}: {source}", path.display())]
pub struct WriteError {
    pub path: PathBuf,
    pub source: std::io::Error,
}

/// Result columns in output order, after any swept parameters.
pub const COLUMNS: [&str; 8] = [
    "dphi1",
    "dphi2",
    "concurrence",
    "negativity",
    "witness_exact",
    "witness_strategy1",
    "witness_strategy2",
    "stderr",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub swept: Vec<f64>,
    pub values: [f64; 8],
}

/// Shortest round-trip decimal, e.g. `2.0`, `1e-14`, `inf`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn rows_csv(axes: &[String], rows: &[Row]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<&str> = axes.iter().map(String::as_str).chain(COLUMNS).collect();
    w.write_record(&header).expect("in-memory write");
    for row in rows {
        let fields: Vec<String> = row
            .swept
            .iter()
            .chain(&row.values)
            .map(|&x| fmt_f64(x))
            .collect();
        w.write_record(&fields).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn rows_json(axes: &[String], rows: &[Row]) -> Vec<u8> {
    let array: Vec<Value> = rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            for (name, &x) in axes
                .iter()
                .map(String::as_str)
                .chain(COLUMNS)
                .zip(row.swept.iter().chain(&row.values))
            {
                obj.insert(name.to_string(), number(x));
            }
            Value::Object(obj)
        })
        .collect();
    json_bytes(&Value::Array(array))
}

pub fn records_csv(records: &[MeasurementRecord]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn json_bytes<S: serde::Serialize>(value: &S) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serialisable report");
    out.push(b'\n');
    out
}

/// Writes to `path`, or to standard output when there is none.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), WriteError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|source| WriteError {
            path: p.to_path_buf(),
            source,
        }),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|source| WriteError {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}
