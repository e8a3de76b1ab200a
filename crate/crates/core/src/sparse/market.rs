//! Matrix Market coordinate I/O (`real symmetric`), for debugging dumps.

use std::fmt::Write as _;
use std::str::FromStr;

use super::SymSparseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const HEADER: &str = "%%MatrixMarket matrix coordinate real symmetric";

/// Serializes the lower triangle with 1-based indices.
pub fn to_string<T: Scalar>(a: &SymSparseMatrix<T>) -> String {
    let mut out = String::new();
    let n = a.order();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "{n} {n} {}", a.nnz());
    for (i, j, v) in a.upper_entries() {
        let _ = writeln!(out, "{} {} {:.17e}", j + 1, i + 1, v);
    }
    out
}

pub fn from_str<T: Scalar + FromStr>(text: &str) -> Result<SymSparseMatrix<T>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::MatrixMarket("empty input".into()))?;
    let lowered = header.to_ascii_lowercase();
    if !lowered.starts_with("%%matrixmarket matrix coordinate real symmetric") {
        return Err(Error::MatrixMarket(format!(
            "unsupported header `{header}`"
        )));
    }
    let mut body = lines.filter(|l| !l.trim().is_empty() && !l.starts_with('%'));
    let size = body
        .next()
        .ok_or_else(|| Error::MatrixMarket("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::MatrixMarket(format!("bad size line: {e}")))?;
    if dims.len() != 3 || dims[0] != dims[1] {
        return Err(Error::MatrixMarket(format!("bad size line `{size}`")));
    }
    let mut trip = Vec::with_capacity(dims[2]);
    for line in body {
        let mut it = line.split_whitespace();
        let mut index = || -> Result<usize> {
            it.next()
                .and_then(|t| t.parse::<usize>().ok())
                .filter(|&v| v >= 1)
                .map(|v| v - 1)
                .ok_or_else(|| Error::MatrixMarket(format!("bad entry `{line}`")))
        };
        let (r, c) = (index()?, index()?);
        let v = line
            .split_whitespace()
            .nth(2)
            .and_then(|t| t.parse::<T>().ok())
            .ok_or_else(|| Error::MatrixMarket(format!("bad value in `{line}`")))?;
        trip.push((r, c, v));
    }
    if trip.len() != dims[2] {
        return Err(Error::MatrixMarket(format!(
            "expected {} entries, found {}",
            dims[2],
            trip.len()
        )));
    }
    SymSparseMatrix::assemble(dims[0], trip)
}
