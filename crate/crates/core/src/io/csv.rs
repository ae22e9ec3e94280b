//! CSV tables with a fixed header and 17 significant digits per value.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diagnostics::{DiagRecord, RateFit};
use crate::error::{Error, Result};
use crate::mild::HolderReport;

/// A record type with stable column names.
pub trait CsvRow {
    fn header() -> &'static [&'static str];
    fn values(&self) -> Vec<f64>;
}

impl CsvRow for DiagRecord {
    fn header() -> &'static [&'static str] {
        &["t", "E0", "E1", "D", "nDA", "n1ps2", "cancel"]
    }

    fn values(&self) -> Vec<f64> {
        vec![self.t, self.e0, self.e1, self.d, self.n_da, self.n_1ps2, self.cancel]
    }
}

impl CsvRow for RateFit {
    fn header() -> &'static [&'static str] {
        &["t_min", "t_max", "r", "slope", "expected", "residual", "samples"]
    }

    fn values(&self) -> Vec<f64> {
        vec![
            self.window.0,
            self.window.1,
            self.r,
            self.slope,
            self.expected,
            self.residual,
            self.samples as f64,
        ]
    }
}

impl CsvRow for HolderReport {
    fn header() -> &'static [&'static str] {
        &["q1", "q2", "q3", "q4", "minimal_R", "minimal_C", "member", "pairs"]
    }

    fn values(&self) -> Vec<f64> {
        let mut v = self.normalized.to_vec();
        v.extend([
            self.minimal_r,
            self.minimal_c,
            if self.member { 1.0 } else { 0.0 },
            self.pairs as f64,
        ]);
        v
    }
}

/// Formats one value with 17 significant digits, enough to reparse exactly.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders a header and rows; fails on an empty table.
pub fn render_table(header: &[&str], rows: &[Vec<f64>]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::EmptyOutput);
    }
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", format_value(*v));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn emit_table(header: &[&str], rows: &[Vec<f64>], path: &Path) -> Result<()> {
    let text = render_table(header, rows)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn emit_csv<R: CsvRow>(records: &[R], path: &Path) -> Result<()> {
    let rows: Vec<Vec<f64>> = records.iter().map(CsvRow::values).collect();
    emit_table(R::header(), &rows, path)
}

/// Parses a table written by [`render_table`].
pub fn parse_table(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or(Error::EmptyOutput)?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|v| {
                v.parse::<f64>().map_err(|e| Error::BadValue {
                    key: v.into(),
                    line: i + 2,
                    msg: e.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}
