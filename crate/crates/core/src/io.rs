//! CSV input and output for data matrices and covariance estimates.
//!
//! Input is comma separated with an optional header row, detected by the
//! first row containing any field that does not parse as a number. Values are
//! written with Rust's shortest round-trip float formatting.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Result, TplError};
use crate::matrix::{DataMatrix, SymMatrix};

/// Output layout for a covariance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    /// `p` rows of `p` comma-separated values.
    Dense,
    /// Header `j,k,value`, 1-based, diagonal plus nonzero upper-triangle entries.
    Triplet,
}

/// Parse a data matrix from CSV text.
pub fn read_data_csv<R: Read>(reader: R) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut values = Vec::new();
    let mut p = None;
    let mut n = 0;
    let mut first = true;
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |pos| pos.line());
            TplError::data(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |pos| pos.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if first {
            first = false;
            if record.iter().any(|f| f.parse::<f64>().is_err()) {
                p = Some(record.len());
                continue;
            }
        }
        let width = *p.get_or_insert(record.len());
        if record.len() != width {
            return Err(TplError::data(format!(
                "line {line}: expected {width} fields, found {}",
                record.len()
            )));
        }
        for (col, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                TplError::data(format!("line {line}, column {}: '{field}' is not a number", col + 1))
            })?;
            if !v.is_finite() {
                return Err(TplError::data(format!(
                    "line {line}, column {}: value is not finite",
                    col + 1
                )));
            }
            values.push(v);
        }
        n += 1;
    }
    if n == 0 {
        return Err(TplError::data("input contains no data rows"));
    }
    DataMatrix::new(n, p.unwrap_or(0), values)
}

pub fn read_data_file(path: &Path) -> Result<DataMatrix> {
    let file = File::open(path)
        .map_err(|e| TplError::data(format!("cannot open {}: {e}", path.display())))?;
    read_data_csv(BufReader::new(file))
}

/// Write a data matrix with a `x1,...,xp` header.
pub fn write_data_csv<W: Write>(mut out: W, data: &DataMatrix) -> std::io::Result<()> {
    let header: Vec<String> = (1..=data.p()).map(|j| format!("x{j}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for row in data.rows() {
        write_row(&mut out, row)?;
    }
    out.flush()
}

fn write_row<W: Write>(out: &mut W, row: &[f64]) -> std::io::Result<()> {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.write_all(b",")?;
        }
        write!(out, "{v}")?;
    }
    out.write_all(b"\n")
}

/// Write the diagonal and the nonzero upper-triangle entries, sorted by `(j, k)`.
pub fn write_triplet<W: Write>(mut out: W, theta: &SymMatrix) -> std::io::Result<()> {
    writeln!(out, "j,k,value")?;
    for (_, j, k) in theta.index().iter() {
        let v = theta.get(j, k);
        if j == k || v != 0.0 {
            writeln!(out, "{},{},{v}", j + 1, k + 1)?;
        }
    }
    out.flush()
}

pub fn write_dense<W: Write>(mut out: W, theta: &SymMatrix) -> std::io::Result<()> {
    let p = theta.p();
    let mut row = vec![0.0; p];
    for j in 0..p {
        for (k, slot) in row.iter_mut().enumerate() {
            *slot = theta.get(j, k);
        }
        write_row(&mut out, &row)?;
    }
    out.flush()
}

pub fn write_matrix<W: Write>(out: W, theta: &SymMatrix, format: MatrixFormat) -> std::io::Result<()> {
    match format {
        MatrixFormat::Dense => write_dense(out, theta),
        MatrixFormat::Triplet => write_triplet(out, theta),
    }
}

/// Create `path` and hand a buffered writer to `f`.
pub fn with_file<F>(path: &Path, f: F) -> std::io::Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()
}
