// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV formats.
//!
//! Numeric tables are comma separated, one observation per line. A first
//! line containing any non-numeric field is taken as a header. Lines
//! starting with `#` are ignored. Every value must be a finite number.
//!
//! * design: `n` rows of `p` values.
//! * response: `n` rows of one value.
//! * data: design columns followed by the response (or the response in the
//!   column given by `--response-col`).
//! * coefficients: `index,coefficient` with a 1-based index; a single
//!   column of values is accepted on input.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use pcreg_core::design::{identity_design, DesignMatrix};

use crate::error::{CliError, Result};

/// A numeric table in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl Table {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.cols + c]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.values)
    }
}

pub fn read_table(path: &Path) -> Result<Table> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_table(file, path)
}

pub fn parse_table(input: impl Read, path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut header = None;
    let mut values = Vec::new();
    let mut cols = 0;
    let mut rows = 0;
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::input(path, e.to_string()))?;
        let line = rec.position().map_or(k as u64 + 1, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if k == 0 && rec.iter().any(|f| f.parse::<f64>().is_err()) {
            header = Some(rec.iter().map(str::to_owned).collect::<Vec<_>>());
            cols = rec.len();
            continue;
        }
        if cols == 0 {
            cols = rec.len();
        } else if rec.len() != cols {
            return Err(CliError::input(
                path,
                format!("line {line}: expected {cols} fields, found {}", rec.len()),
            ));
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                CliError::input(
                    path,
                    format!("line {line}, column {}: '{field}' is not a number", c + 1),
                )
            })?;
            if !v.is_finite() {
                return Err(CliError::input(
                    path,
                    format!("line {line}, column {}: value is not finite", c + 1),
                ));
            }
            values.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(CliError::input(path, "no data rows"));
    }
    Ok(Table {
        header,
        rows,
        cols,
        values,
    })
}

/// Wraps a dense matrix, recognising an exact identity so that the exact
/// 1-D solvers are used.
pub fn design_from_matrix(m: DMatrix<f64>) -> DesignMatrix {
    if m.is_square() && m == DMatrix::identity(m.nrows(), m.ncols()) {
        if let Ok(i) = identity_design(m.nrows()) {
            return i;
        }
    }
    DesignMatrix::external(m)
}

pub fn read_design(path: &Path) -> Result<DesignMatrix> {
    Ok(design_from_matrix(read_table(path)?.to_matrix()))
}

pub fn read_response(path: &Path) -> Result<Vec<f64>> {
    let t = read_table(path)?;
    if t.cols != 1 {
        return Err(CliError::input(
            path,
            format!("response must have one column, found {}", t.cols),
        ));
    }
    Ok(t.values)
}

/// Splits a data file into design and response. `response_col` is 1-based
/// and defaults to the last column.
pub fn read_data(path: &Path, response_col: Option<usize>) -> Result<(DesignMatrix, Vec<f64>)> {
    let t = read_table(path)?;
    if t.cols < 2 {
        return Err(CliError::input(
            path,
            "data file needs at least one design column and a response column",
        ));
    }
    let rc = match response_col {
        None => t.cols - 1,
        Some(c) if (1..=t.cols).contains(&c) => c - 1,
        Some(c) => {
            return Err(CliError::usage(format!(
                "--response-col {c} is outside 1..={}",
                t.cols
            )))
        }
    };
    let y = t.column(rc);
    let keep: Vec<usize> = (0..t.cols).filter(|&c| c != rc).collect();
    let m = DMatrix::from_fn(t.rows, keep.len(), |r, c| t.get(r, keep[c]));
    Ok((design_from_matrix(m), y))
}

/// Column means and sample standard deviations removed from the design.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Standardisation {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

/// Centres every column to mean 0 and scales it to sample standard
/// deviation 1.
pub fn standardise(a: &DesignMatrix) -> Result<(DesignMatrix, Standardisation)> {
    let n = a.n();
    if n < 2 {
        return Err(CliError::Runtime(
            "standardising needs at least two rows".into(),
        ));
    }
    let mut m = a.data.clone();
    let mut means = Vec::with_capacity(a.p());
    let mut sds = Vec::with_capacity(a.p());
    for (j, mut col) in m.column_iter_mut().enumerate() {
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
        let sd = (col.norm_squared() / (n - 1) as f64).sqrt();
        if !(sd > 0.0) {
            return Err(CliError::Runtime(format!(
                "design column {} is constant and cannot be standardised",
                j + 1
            )));
        }
        col /= sd;
        means.push(mean);
        sds.push(sd);
    }
    Ok((DesignMatrix::external(m), Standardisation { means, sds }))
}

/// Shortest representation that parses back to the same value.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_coefficients(path: &Path, x: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Runtime(e.to_string());
    w.write_record(["index", "coefficient"]).map_err(io)?;
    for (i, v) in x.iter().enumerate() {
        w.write_record([(i + 1).to_string(), fmt_f64(*v)])
            .map_err(io)?;
    }
    write_file(
        path,
        &w.into_inner()
            .map_err(|e| CliError::Runtime(e.to_string()))?,
    )
}

pub fn read_coefficients(path: &Path) -> Result<Vec<f64>> {
    let t = read_table(path)?;
    match t.cols {
        1 => Ok(t.values),
        2 => {
            for r in 0..t.rows {
                if t.get(r, 0) != (r + 1) as f64 {
                    return Err(CliError::input(
                        path,
                        format!("row {}: index must be {}", r + 1, r + 1),
                    ));
                }
            }
            Ok(t.column(1))
        }
        c => Err(CliError::input(
            path,
            format!("coefficients need 1 or 2 columns, found {c}"),
        )),
    }
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(bytes).map_err(|e| CliError::io(path, e))
}
