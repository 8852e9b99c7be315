//! Column-labelled numeric tables.
//!
//! Numbers are written with 9 significant digits, in scientific notation when
//! the magnitude is outside [1e-3, 1e6). Zero is written as `0`.

use std::io::Write;
use std::path::Path;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DataTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl DataTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(CliError::Config(format!(
                "row has {} values, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Numerical(cavsps_core::Error::SolverFailure(
                format!("non-finite table value {v}"),
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|v| format_float(*v)))
                .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }

    #[cfg(test)]
    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is ascii")
    }

    /// Writes to `path`, or to stdout when `path` is `None`.
    pub fn emit(&self, path: Option<&Path>) -> Result<()> {
        match path {
            Some(p) => self.write_to(std::fs::File::create(p)?),
            None => self.write_to(std::io::stdout().lock()),
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| CliError::data(path, e.to_string()))?;
        Self::read_from(file).map_err(|m| CliError::data(path, m))
    }

    pub fn read_from<R: std::io::Read>(input: R) -> Result<Self, String> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let columns: Vec<String> = r
            .headers()
            .map_err(|e| e.to_string())?
            .iter()
            .map(str::to_owned)
            .collect();
        let mut table = Self::new(columns);
        for (line, record) in r.records().enumerate() {
            let record = record.map_err(|e| e.to_string())?;
            let row = record
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| format!("row {}: `{s}` is not a number", line + 1))
                })
                .collect::<Result<Vec<f64>, String>>()?;
            if row.len() != table.columns.len() {
                return Err(format!(
                    "row {} has {} fields, expected {}",
                    line + 1,
                    row.len(),
                    table.columns.len()
                ));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(format!("row {}: values must be finite", line + 1));
            }
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn require(&self, name: &str, path: &Path) -> Result<Vec<f64>> {
        self.column(name)
            .ok_or_else(|| CliError::data(path, format!("missing column `{name}`")))
    }
}

pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if !(1e-3..1e6).contains(&a) {
        return format!("{x:.8e}");
    }
    let exponent = a.log10().floor() as i32;
    let decimals = (8 - exponent).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // Rounding can carry into a new leading digit (999999.9996 -> 1000000).
    if s.trim_start_matches('-')
        .split('.')
        .next()
        .map_or(0, str::len)
        > 6
    {
        return format!("{x:.8e}");
    }
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        s
    }
}
