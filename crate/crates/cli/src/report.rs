//! Report emission: a JSON document with fixed top-level keys, or a CSV
//! table, to stdout or a file.

use serde_json::{json, Value};
use std::io::Write;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (expected json or csv)")),
        }
    }
}

pub struct CsvTable {
    pub headers: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub struct Report {
    pub spec_digest: String,
    pub command: String,
    pub results: Value,
    pub diagnostics: Vec<String>,
    pub table: CsvTable,
}

impl Report {
    pub fn emit(&self, format: Format, out: Option<&PathBuf>) -> std::io::Result<()> {
        let body = match format {
            Format::Json => {
                let doc = json!({
                    "spec_digest": self.spec_digest,
                    "command": self.command,
                    "results": self.results,
                    "diagnostics": self.diagnostics,
                });
                let mut s = serde_json::to_string_pretty(&doc)?;
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(self.headers_owned()).map_err(csv_io_err)?;
                for row in &self.table.rows {
                    w.write_record(row).map_err(csv_io_err)?;
                }
                String::from_utf8(w.into_inner().map_err(|e| csv_io_err(e.into_error().into()))?)
                    .expect("csv output is utf-8")
            }
        };
        match out {
            Some(path) => std::fs::write(path, body),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(body.as_bytes())
            }
        }
    }

    fn headers_owned(&self) -> Vec<String> {
        self.table.headers.iter().map(|h| h.to_string()).collect()
    }
}

fn csv_io_err(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

/// Shortest round-trip decimal for a float cell.
pub fn cell(x: f64) -> String {
    format!("{x}")
}

/// Semicolon-joined float vector for a CSV cell.
pub fn vec_cell(xs: &[f64]) -> String {
    xs.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(";")
}
