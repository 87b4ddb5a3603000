//! Matrix Market coordinate format, real or integer fields, general,
//! symmetric or skew-symmetric storage.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::SparseMatrix;
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
}

pub fn read_matrix_market(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    parse_matrix_market(fs::File::open(path)?)
}

pub fn parse_matrix_market(reader: impl Read) -> Result<SparseMatrix> {
    let mut lines = BufReader::new(reader).lines().enumerate().map(|(i, l)| (i + 1, l));

    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty file".into() })?;
    let header = header?;
    let symmetry = parse_header(&header)?;

    let mut size: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut n = 0;
    let mut last_line = 1;
    for (line_no, line) in lines {
        let line = line?;
        last_line = line_no;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(parse_err(format!("size line needs 3 fields, found {}", fields.len())));
                }
                let dims: Vec<usize> = fields
                    .iter()
                    .map(|f| f.parse().map_err(|_| parse_err(format!("bad integer {f:?}"))))
                    .collect::<Result<_>>()?;
                if dims[0] != dims[1] {
                    return Err(Error::UnsupportedFormat(format!("non-square {}x{} matrix", dims[0], dims[1])));
                }
                n = dims[0];
                size = Some((n, dims[2]));
                triplets.reserve(dims[2]);
            }
            Some((_, nnz)) => {
                if fields.len() != 3 {
                    return Err(parse_err(format!("entry needs 3 fields, found {}", fields.len())));
                }
                if triplets.len() >= nnz {
                    return Err(parse_err(format!("more than the declared {nnz} entries")));
                }
                let index = |f: &str| -> Result<usize> {
                    let k: usize = f.parse().map_err(|_| parse_err(format!("bad index {f:?}")))?;
                    if k == 0 || k > n {
                        return Err(parse_err(format!("index {k} outside 1..={n}")));
                    }
                    Ok(k - 1)
                };
                let i = index(fields[0])?;
                let j = index(fields[1])?;
                let v: f64 = fields[2].parse().map_err(|_| parse_err(format!("bad value {:?}", fields[2])))?;
                if !v.is_finite() {
                    return Err(parse_err(format!("non-finite value {v}")));
                }
                triplets.push((i, j, v));
            }
        }
    }
    let (n, nnz) = size.ok_or(Error::Parse { line: last_line, message: "missing size line".into() })?;
    if triplets.len() != nnz {
        return Err(Error::Parse {
            line: last_line,
            message: format!("declared {nnz} entries but found {}", triplets.len()),
        });
    }
    if symmetry != Symmetry::General {
        let sign = if symmetry == Symmetry::Skew { -1.0 } else { 1.0 };
        let mirrored: Vec<_> = triplets.iter().filter(|t| t.0 != t.1).map(|&(i, j, v)| (j, i, sign * v)).collect();
        triplets.extend(mirrored);
    }
    SparseMatrix::from_triplets(n, &triplets)
}

fn parse_header(header: &str) -> Result<Symmetry> {
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::Parse { line: 1, message: format!("not a Matrix Market header: {header:?}") });
    }
    if tokens[2] != "coordinate" {
        return Err(Error::UnsupportedFormat(format!("{} storage", tokens[2])));
    }
    match tokens[3].as_str() {
        "real" | "double" | "integer" => {}
        other => return Err(Error::UnsupportedFormat(format!("{other} field"))),
    }
    match tokens[4].as_str() {
        "general" => Ok(Symmetry::General),
        "symmetric" => Ok(Symmetry::Symmetric),
        "skew-symmetric" => Ok(Symmetry::Skew),
        other => Err(Error::UnsupportedFormat(format!("{other} symmetry"))),
    }
}

pub fn read_dense_matrix_market(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_dense_matrix_market(fs::File::open(path)?)
}

/// `array real general` files, entries in column-major order.
pub fn parse_dense_matrix_market(reader: impl Read) -> Result<DenseMatrix> {
    let mut lines = BufReader::new(reader).lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty file".into() })?;
    let header = header?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(Error::Parse { line: 1, message: format!("not a Matrix Market header: {header:?}") });
    }
    if tokens[2] != "array" || !matches!(tokens[3].as_str(), "real" | "double" | "integer") || tokens[4] != "general" {
        return Err(Error::UnsupportedFormat(format!("{} {} {} for a dense block", tokens[2], tokens[3], tokens[4])));
    }
    let mut size: Option<(usize, usize)> = None;
    let mut values = Vec::new();
    let mut last_line = 1;
    for (line_no, line) in lines {
        let line = line?;
        last_line = line_no;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        match size {
            None => {
                let dims: Vec<usize> = trimmed
                    .split_whitespace()
                    .map(|f| f.parse().map_err(|_| parse_err(format!("bad integer {f:?}"))))
                    .collect::<Result<_>>()?;
                if dims.len() != 2 {
                    return Err(parse_err(format!("size line needs 2 fields, found {}", dims.len())));
                }
                size = Some((dims[0], dims[1]));
            }
            Some(_) => {
                let v: f64 = trimmed.parse().map_err(|_| parse_err(format!("bad value {trimmed:?}")))?;
                if !v.is_finite() {
                    return Err(parse_err(format!("non-finite value {v}")));
                }
                values.push(v);
            }
        }
    }
    let (rows, cols) = size.ok_or(Error::Parse { line: last_line, message: "missing size line".into() })?;
    if values.len() != rows * cols {
        return Err(Error::Parse {
            line: last_line,
            message: format!("expected {} values, found {}", rows * cols, values.len()),
        });
    }
    Ok(DenseMatrix::from_fn(rows, cols, |i, j| values[j * rows + i]))
}

/// Writes every stored entry in `general` form. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_matrix_market(a: &SparseMatrix, mut out: impl Write) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(out, "{} {} {}", a.n(), a.n(), a.nnz())?;
    for (i, j, v) in a.iter() {
        writeln!(out, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}

/// Writes a dense block as `array real general`, column by column.
pub fn write_dense_matrix_market(m: &DenseMatrix, mut out: impl Write) -> Result<()> {
    writeln!(out, "%%MatrixMarket matrix array real general")?;
    writeln!(out, "{} {}", m.rows(), m.cols())?;
    for j in 0..m.cols() {
        for i in 0..m.rows() {
            writeln!(out, "{:e}", m[(i, j)])?;
        }
    }
    Ok(())
}
