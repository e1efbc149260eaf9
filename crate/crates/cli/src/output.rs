//! Tables, artifacts and where they go.

use std::fs;
use std::path::Path;

use serde_json::Value;

use crate::config::Format;
use crate::error::CliError;

/// A CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        Self { headers: headers.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

/// Shortest round-trip decimal form; empty for missing values.
pub fn num(x: f64) -> String {
    format!("{x}")
}

pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// The result of one experiment: a primary table/JSON pair plus extra files.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub stem: String,
    pub json: Value,
    pub table: Table,
    /// (file name, contents)
    pub extra: Vec<(String, String)>,
}

impl Artifact {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.table.to_csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("JSON value serializes");
                s.push('\n');
                s
            }
        }
    }

    /// Write the primary output and extras into `dir`.
    pub fn write(&self, dir: &Path, format: Format) -> Result<(), CliError> {
        fs::create_dir_all(dir)?;
        let ext = match format {
            Format::Csv => "csv",
            Format::Json => "json",
        };
        fs::write(dir.join(format!("{}.{ext}", self.stem)), self.render(format))?;
        for (name, contents) in &self.extra {
            fs::write(dir.join(name), contents)?;
        }
        Ok(())
    }
}
