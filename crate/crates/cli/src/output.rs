//! Output plumbing: every table and record carries the version string and
//! the run configuration.

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

pub fn version() -> String {
    format!("critpoints {} ({})", env!("CARGO_PKG_VERSION"), env!("CRITPOINTS_GIT_DESCRIBE"))
}

/// Opens `path` for writing, or stdout when `path` is `None` or `-`.
pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        None => Box::new(BufWriter::new(io::stdout().lock())),
        Some(p) if p.as_os_str() == "-" => Box::new(BufWriter::new(io::stdout().lock())),
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
    })
}

/// A CSV table preceded by `#` comment lines with the version, the
/// configuration and any extra notes.
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    notes: Vec<String>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self { header: header.iter().map(|h| h.as_ref().to_string()).collect(), rows: Vec::new(), notes: Vec::new() }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<C: Serialize>(&self, config: &C, path: Option<&Path>) -> Result<()> {
        let mut out = open(path)?;
        writeln!(out, "# {}", version())?;
        writeln!(out, "# config: {}", serde_json::to_string(config)?)?;
        for n in &self.notes {
            writeln!(out, "# {n}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Formats a float for CSV: shortest round-trip decimal, `inf`/`-inf`/`nan`
/// spelled out.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

/// A JSON number, or `null` when `v` is not finite.
pub fn jnum(v: f64) -> Value {
    serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
}

/// Writes `body` as one JSON object with `version` and `config` in front
/// and `runtime` (thread count and wall time, which are not part of the
/// reproducible result) at the end.
pub fn write_record<C: Serialize>(config: &C, body: Value, seconds: f64, path: Option<&Path>) -> Result<()> {
    let mut obj = Map::new();
    obj.insert("version".into(), json!(version()));
    obj.insert("config".into(), serde_json::to_value(config)?);
    if let Value::Object(m) = body {
        obj.extend(m);
    } else {
        obj.insert("result".into(), body);
    }
    obj.insert("runtime".into(), json!({ "threads": rayon::current_num_threads(), "seconds": seconds }));
    let mut out = open(path)?;
    serde_json::to_writer_pretty(&mut out, &Value::Object(obj))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}
