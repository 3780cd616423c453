//! Plain-text numeric I/O shared by the model, dataset and report writers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats `x` with 17 significant digits, which round-trips every `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON array of numbers in [`fmt17`] notation.
pub fn json_array17(values: &[f64]) -> Result<String> {
    let mut out = String::from("[");
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::arg(format!("cannot serialize non-finite value {v}")));
        }
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&fmt17(v));
    }
    out.push(']');
    Ok(out)
}

/// Writes a comma-separated matrix, one row per line.
pub fn write_matrix_csv(rows: usize, cols: usize, data: &[f64]) -> String {
    debug_assert_eq!(rows * cols, data.len());
    let mut out = String::with_capacity(rows * cols * 25);
    for r in 0..rows {
        for c in 0..cols {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:.16e}", data[r * cols + c]);
        }
        out.push('\n');
    }
    out
}

/// Parses a matrix written by [`write_matrix_csv`]; all rows must have `cols` fields.
pub fn parse_matrix_csv(text: &str, cols: usize) -> Result<(usize, Vec<f64>)> {
    let mut data = Vec::new();
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {}: bad number {field:?}", lineno + 1)))?;
            data.push(v);
        }
        let got = data.len() - before;
        if got != cols {
            return Err(Error::Shape(format!(
                "line {}: expected {cols} columns, found {got}",
                lineno + 1
            )));
        }
        rows += 1;
    }
    Ok((rows, data))
}

/// Table with a header row, written as CSV with 17-digit numbers.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<TableCell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TableCell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for TableCell {
    fn from(v: f64) -> Self {
        TableCell::Num(v)
    }
}

impl From<usize> for TableCell {
    fn from(v: usize) -> Self {
        TableCell::Int(v as i64)
    }
}

impl From<&str> for TableCell {
    fn from(v: &str) -> Self {
        TableCell::Text(v.to_string())
    }
}

impl From<String> for TableCell {
    fn from(v: String) -> Self {
        TableCell::Text(v)
    }
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<TableCell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let fields: Vec<String> = row
                .iter()
                .map(|c| match c {
                    TableCell::Num(v) => fmt17(*v),
                    TableCell::Int(v) => v.to_string(),
                    TableCell::Text(s) => s.clone(),
                })
                .collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// Inverse of [`Table::to_csv`]: integers stay integers, other numbers are floats.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty table".into()))?
            .split(',')
            .map(str::to_string)
            .collect::<Vec<_>>();
        let mut table = Table {
            header,
            rows: Vec::new(),
        };
        for line in lines.filter(|l| !l.is_empty()) {
            let row: Vec<TableCell> = line
                .split(',')
                .map(|f| {
                    if let Ok(i) = f.parse::<i64>() {
                        TableCell::Int(i)
                    } else if let Ok(v) = f.parse::<f64>() {
                        TableCell::Num(v)
                    } else {
                        TableCell::Text(f.to_string())
                    }
                })
                .collect();
            if row.len() != table.header.len() {
                return Err(Error::Shape(format!(
                    "table row has {} fields, header has {}",
                    row.len(),
                    table.header.len()
                )));
            }
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn fmt17_round_trips(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = fmt17(x);
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }

        #[test]
        fn matrix_csv_round_trips(data in proptest::collection::vec(-1e6f64..1e6, 12)) {
            let text = write_matrix_csv(3, 4, &data);
            let (rows, back) = parse_matrix_csv(&text, 4).unwrap();
            prop_assert_eq!(rows, 3);
            prop_assert_eq!(write_matrix_csv(3, 4, &back), text);
        }
    }

    #[test]
    fn table_csv_reemits_identically() {
        let mut t = Table::new(["order", "kind", "loss"]);
        t.push(vec![2usize.into(), "low".into(), 0.125.into()]);
        t.push(vec![20usize.into(), "mixed".into(), 3.5e-7.into()]);
        let text = t.to_csv();
        assert_eq!(Table::from_csv(&text).unwrap().to_csv(), text);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        assert!(matches!(parse_matrix_csv("1,2,3\n4,5\n", 3), Err(Error::Shape(_))));
    }
}
