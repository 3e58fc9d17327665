//! Header-addressed CSV tables.
//!
//! Comma separated, first row is the header, `.` as decimal separator.
//! Numbers are written in shortest round-trip form, so reading back what was
//! written reproduces every value bit for bit.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> CliResult<Table> {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        Self::from_reader(file).map_err(|e| match e {
            CliError::Input(msg) => CliError::Input(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_reader<R: std::io::Read>(reader: R) -> CliResult<Table> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| CliError::input(format!("cannot read header: {e}")))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| CliError::input(format!("data row {}: {e}", i + 1)))?;
            rows.push(record.iter().map(str::to_string).collect());
        }
        Ok(Table { headers, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Index of a required column; `flag` names the option that selects it.
    pub fn require(&self, name: &str, flag: &str) -> CliResult<usize> {
        self.column(name).ok_or_else(|| {
            CliError::input(format!(
                "missing column '{name}' (select another column with {flag}); found: {}",
                self.headers.join(", ")
            ))
        })
    }

    /// Parses a column as finite reals, reporting the first bad cell.
    pub fn numeric(&self, col: usize) -> CliResult<Vec<f64>> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let cell = row.get(col).map(|c| c.trim()).unwrap_or("");
                match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(CliError::input(format!(
                        "data row {}, column '{}': '{cell}' is not a finite number",
                        i + 1,
                        self.headers[col]
                    ))),
                }
            })
            .collect()
    }

    /// Optional positive weight column: an explicitly requested column must
    /// exist; otherwise the default name is used if present, else all ones.
    pub fn weights(&self, explicit: Option<&str>, default: &str) -> CliResult<Vec<f64>> {
        let col = match explicit {
            Some(name) => Some(self.require(name, "--weight")?),
            None => self.column(default),
        };
        let Some(col) = col else {
            return Ok(vec![1.0; self.len()]);
        };
        let w = self.numeric(col)?;
        if let Some(i) = w.iter().position(|&x| x <= 0.0) {
            return Err(CliError::input(format!(
                "data row {}, column '{}': weight must be positive",
                i + 1,
                self.headers[col]
            )));
        }
        Ok(w)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut buf = Vec::new();
        {
            let mut wtr = csv::Writer::from_writer(&mut buf);
            wtr.write_record(&self.headers).map_err(csv_io(path))?;
            for row in &self.rows {
                wtr.write_record(row).map_err(csv_io(path))?;
            }
            wtr.flush().map_err(|e| CliError::io(path, e))?;
        }
        write_file(path, &buf)
    }
}

fn csv_io(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::io(path, std::io::Error::other(e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path, e))
}

/// Shortest decimal that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x}")
}
