//! Record formatting for the three output formats.

use std::io::{self, Write};

use rwd_core::eval::Value;
use serde_json::{json, Map, Value as Json};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Jsonl,
    Csv,
    Pretty,
}

/// Exact rationals stay exact: integers become JSON numbers when they fit,
/// everything else a string.
pub fn value_json(v: &Value) -> Json {
    match v {
        Value::Rational(r) => {
            if r.is_integer() {
                if let Ok(i) = i64::try_from(r.numer().clone()) {
                    return json!(i);
                }
            }
            json!(r.to_string())
        }
        Value::Float(x) => float_json(*x),
        Value::Vector(xs) => Json::Array(xs.iter().map(|&x| float_json(x)).collect()),
        Value::Term(t) => json!(t.to_string()),
    }
}

pub fn float_json(x: f64) -> Json {
    if x == 0.0 {
        return json!(0);
    }
    serde_json::Number::from_f64(x).map_or_else(|| json!(x.to_string()), Json::Number)
}

/// Streams records with a fixed set of columns.
pub struct RecordWriter<W: Write> {
    out: W,
    format: Format,
    columns: Vec<&'static str>,
    started: bool,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(out: W, format: Format, columns: Vec<&'static str>) -> Self {
        RecordWriter {
            out,
            format,
            columns,
            started: false,
        }
    }

    pub fn write(&mut self, record: &Map<String, Json>) -> io::Result<()> {
        match self.format {
            Format::Jsonl => writeln!(self.out, "{}", Json::Object(record.clone())),
            Format::Csv => {
                if !self.started {
                    writeln!(self.out, "{}", self.columns.join(","))?;
                }
                let cells: Vec<String> = self
                    .columns
                    .iter()
                    .map(|c| csv_cell(record.get(*c).unwrap_or(&Json::Null)))
                    .collect();
                writeln!(self.out, "{}", cells.join(","))
            }
            Format::Pretty => {
                let cells: Vec<String> = self
                    .columns
                    .iter()
                    .filter_map(|c| record.get(*c).map(|v| format!("{c}={}", plain(v))))
                    .collect();
                writeln!(self.out, "{}", cells.join("  "))
            }
        }?;
        self.started = true;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.out.flush()
    }
}

fn plain(v: &Json) -> String {
    match v {
        Json::String(s) => s.clone(),
        Json::Null => String::new(),
        other => other.to_string(),
    }
}

fn csv_cell(v: &Json) -> String {
    let s = plain(v);
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

/// A single report object: one JSON line, a two-column CSV, or `key: value`
/// lines.
pub fn write_report(out: &mut impl Write, format: Format, report: &Map<String, Json>) -> io::Result<()> {
    match format {
        Format::Jsonl => writeln!(out, "{}", Json::Object(report.clone())),
        Format::Csv => {
            writeln!(out, "key,value")?;
            for (k, v) in report {
                writeln!(out, "{k},{}", csv_cell(v))?;
            }
            Ok(())
        }
        Format::Pretty => {
            for (k, v) in report {
                writeln!(out, "{k}: {}", plain(v))?;
            }
            Ok(())
        }
    }
}
