//! Matrix Market and CSV serialization.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{PhError, Result};
use crate::sparse::{self, Csr};

/// Matrix Market coordinate text, entries in row-major order.
/// With `integer`, values are rounded and written as integers.
pub fn matrix_market(a: &Csr, integer: bool) -> String {
    let field = if integer { "integer" } else { "real" };
    let mut s = format!("%%MatrixMarket matrix coordinate {field} general\n");
    let _ = writeln!(s, "{} {} {}", a.nrows(), a.ncols(), a.nnz());
    for (i, j, &v) in a.triplet_iter() {
        if integer {
            let _ = writeln!(s, "{} {} {}", i + 1, j + 1, v.round() as i64);
        } else {
            let _ = writeln!(s, "{} {} {:e}", i + 1, j + 1, v);
        }
    }
    s
}

pub fn write_matrix_market(path: &Path, a: &Csr, integer: bool) -> Result<()> {
    std::fs::write(path, matrix_market(a, integer))?;
    Ok(())
}

pub fn parse_matrix_market(text: &str) -> Result<Csr> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| PhError::Parse("empty Matrix Market file".into()))?;
    let h: Vec<_> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if h.len() < 5 || h[0] != "%%matrixmarket" || h[1] != "matrix" || h[2] != "coordinate" || h[4] != "general" {
        return Err(PhError::Parse(format!("unsupported header '{header}'")));
    }
    let mut lines = lines.filter(|l| !l.starts_with('%'));
    let size = lines.next().ok_or_else(|| PhError::Parse("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| PhError::Parse(format!("bad size line '{size}'"))))
        .collect::<Result<_>>()?;
    if dims.len() != 3 {
        return Err(PhError::Parse(format!("bad size line '{size}'")));
    }
    let mut trip = Vec::with_capacity(dims[2]);
    for line in lines {
        let t: Vec<_> = line.split_whitespace().collect();
        let bad = || PhError::Parse(format!("bad entry '{line}'"));
        if t.len() != 3 {
            return Err(bad());
        }
        let i: usize = t[0].parse().map_err(|_| bad())?;
        let j: usize = t[1].parse().map_err(|_| bad())?;
        let v: f64 = t[2].parse().map_err(|_| bad())?;
        if i == 0 || j == 0 || i > dims[0] || j > dims[1] {
            return Err(bad());
        }
        trip.push((i - 1, j - 1, v));
    }
    if trip.len() != dims[2] {
        return Err(PhError::Parse(format!("expected {} entries, found {}", dims[2], trip.len())));
    }
    Ok(sparse::from_triplets(dims[0], dims[1], &trip))
}

pub fn read_matrix_market(path: &Path) -> Result<Csr> {
    parse_matrix_market(&std::fs::read_to_string(path)?)
}

/// Writes a header and rows of floats as CSV.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| PhError::Parse(e.to_string()))?;
    w.write_record(header).map_err(|e| PhError::Parse(e.to_string()))?;
    for r in rows {
        w.write_record(r.iter().map(|v| format!("{v:e}"))).map_err(|e| PhError::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
