//! Plain CSV tables with a version line.
//!
//! ```text
//! # cavsim v0.1.0
//! t,theta,p_s
//! 1.0000000000000001e-1,3.2000000000000001e-2,...
//! ```
//!
//! Floats are written with 17 significant digits, so they parse back exactly.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("missing `# cavsim v...` version line")]
    MissingVersion,
    #[error("missing column header line")]
    MissingHeader,
    #[error("row {row}: expected {expected} fields, found {found}")]
    Width { row: usize, expected: usize, found: usize },
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    Number { row: usize, column: String, value: String },
    #[error("no column named `{0}`")]
    NoColumn(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Formats a float with round-trip precision.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Table { columns: columns.iter().map(|c| c.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>, CsvError> {
        let k = self.columns.iter().position(|c| c == name).ok_or_else(|| CsvError::NoColumn(name.to_string()))?;
        Ok(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# cavsim v{VERSION}");
        let _ = writeln!(s, "{}", self.columns.join(","));
        for r in &self.rows {
            let fields: Vec<String> = r.iter().map(|&v| fmt_f64(v)).collect();
            let _ = writeln!(s, "{}", fields.join(","));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, CsvError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(l) if l.starts_with("# cavsim v") => {}
            _ => return Err(CsvError::MissingVersion),
        }
        let header = lines.next().ok_or(CsvError::MissingHeader)?;
        let columns: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != columns.len() {
                return Err(CsvError::Width { row: k + 1, expected: columns.len(), found: fields.len() });
            }
            let row = fields
                .iter()
                .zip(&columns)
                .map(|(f, c)| {
                    f.trim().parse::<f64>().map_err(|_| CsvError::Number {
                        row: k + 1,
                        column: c.clone(),
                        value: f.to_string(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Table { columns, rows })
    }

    pub fn write(&self, path: &Path) -> Result<(), CsvError> {
        fs::write(path, self.render())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, CsvError> {
        Self::parse(&fs::read_to_string(path)?)
    }
}
