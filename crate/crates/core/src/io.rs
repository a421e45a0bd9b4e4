//! Matrix Market coordinate files and the binary CSR cache.
//!
//! The binary cache layout is little-endian: the magic `CSR1`, then `u64`
//! `n_rows`, `n_cols`, `nnz`, followed by `row_ptr` as `u64`, `col_idx` as
//! `u64` and `values` as `f64`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::csr::{CsrMatrix, DuplicatePolicy, Triplet};
use crate::error::{Error, Result};

const CACHE_MAGIC: &[u8; 4] = b"CSR1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_banner(line: &str) -> Result<(Field, Symmetry)> {
    let tokens: Vec<String> = line
        .split_whitespace()
        .map(str::to_ascii_lowercase)
        .collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" {
        return Err(parse_err(1, "missing %%MatrixMarket banner"));
    }
    if tokens[1] != "matrix" {
        return Err(Error::UnsupportedFormat(format!("object '{}'", tokens[1])));
    }
    if tokens[2] != "coordinate" {
        return Err(Error::UnsupportedFormat(format!("format '{}'", tokens[2])));
    }
    let field = match tokens[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(Error::UnsupportedFormat(format!("field '{other}'"))),
    };
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(Error::UnsupportedFormat(format!("symmetry '{other}'"))),
    };
    Ok((field, symmetry))
}

fn parse_index(tok: Option<&str>, line: usize, bound: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing index"))?;
    let v: usize = tok
        .parse()
        .map_err(|_| parse_err(line, format!("bad index '{tok}'")))?;
    if v == 0 || v > bound {
        return Err(parse_err(line, format!("index {v} outside 1..={bound}")));
    }
    Ok(v - 1)
}

/// Reads a Matrix Market coordinate matrix from any buffered reader.
///
/// Pattern entries become `1.0`. When `symmetrize` is set, symmetric and
/// skew-symmetric files are expanded to full storage by mirroring strictly
/// off-diagonal entries; otherwise only the stored triangle is returned.
/// Repeated coordinates are summed.
pub fn read_matrix_market<R: BufRead>(reader: R, symmetrize: bool) -> Result<CsrMatrix> {
    let mut lines = reader.lines().enumerate();
    let (_, banner) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let (field, symmetry) = parse_banner(&banner?)?;

    let mut size: Option<(usize, usize, usize)> = None;
    let mut entries: Vec<Triplet> = Vec::new();
    let mut seen = 0usize;
    for (idx, line) in lines {
        let line = line?;
        let lineno = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut toks = trimmed.split_whitespace();
        let Some((n_rows, n_cols, nnz)) = size else {
            let mut next = || -> Result<usize> {
                let t = toks
                    .next()
                    .ok_or_else(|| parse_err(lineno, "short size line"))?;
                t.parse()
                    .map_err(|_| parse_err(lineno, format!("bad size value '{t}'")))
            };
            let dims = (next()?, next()?, next()?);
            entries.reserve(if symmetry == Symmetry::General {
                dims.2
            } else {
                2 * dims.2
            });
            size = Some(dims);
            continue;
        };
        if seen == nnz {
            return Err(parse_err(lineno, "more entries than declared"));
        }
        seen += 1;
        let row = parse_index(toks.next(), lineno, n_rows)?;
        let col = parse_index(toks.next(), lineno, n_cols)?;
        let value = match field {
            Field::Pattern => 1.0,
            Field::Real | Field::Integer => {
                let t = toks
                    .next()
                    .ok_or_else(|| parse_err(lineno, "missing value"))?;
                t.parse::<f64>()
                    .map_err(|_| parse_err(lineno, format!("bad value '{t}'")))?
            }
        };
        entries.push(Triplet::new(row, col, value));
        if symmetrize && row != col {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => entries.push(Triplet::new(col, row, value)),
                Symmetry::SkewSymmetric => entries.push(Triplet::new(col, row, -value)),
            }
        }
    }
    let (n_rows, n_cols, nnz) = size.ok_or_else(|| parse_err(1, "missing size line"))?;
    if seen != nnz {
        return Err(parse_err(
            0,
            format!("expected {nnz} entries, found {seen}"),
        ));
    }
    CsrMatrix::from_triplets(n_rows, n_cols, &entries, DuplicatePolicy::Sum)
}

pub fn load_matrix_market(path: impl AsRef<Path>, symmetrize: bool) -> Result<CsrMatrix> {
    let file = File::open(path)?;
    read_matrix_market(BufReader::with_capacity(1 << 20, file), symmetrize)
}

/// Writes a `real general` coordinate file with full-precision values.
pub fn write_matrix_market<W: Write>(mut w: W, m: &CsrMatrix) -> Result<()> {
    writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
    writeln!(w, "{} {} {}", m.n_rows(), m.n_cols(), m.nnz())?;
    for row in 0..m.n_rows() {
        let (cols, vals) = m.row(row);
        for (&c, &v) in cols.iter().zip(vals) {
            writeln!(w, "{} {} {:?}", row + 1, c + 1, v)?;
        }
    }
    Ok(())
}

pub fn save_matrix_market(path: impl AsRef<Path>, m: &CsrMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_matrix_market(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn write_binary<W: Write>(mut w: W, m: &CsrMatrix) -> Result<()> {
    w.write_all(CACHE_MAGIC)?;
    for v in [m.n_rows(), m.n_cols(), m.nnz()] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    for &p in m.row_ptr() {
        w.write_all(&(p as u64).to_le_bytes())?;
    }
    for &c in m.col_idx() {
        w.write_all(&(c as u64).to_le_bytes())?;
    }
    for &v in m.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<u64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<CsrMatrix> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(parse_err(0, "bad CSR cache magic"));
    }
    let header = read_u64s(&mut r, 3)?;
    let (n_rows, n_cols, nnz) = (header[0] as usize, header[1] as usize, header[2] as usize);
    let row_ptr = read_u64s(&mut r, n_rows + 1)?
        .into_iter()
        .map(|v| v as usize)
        .collect();
    let col_idx = read_u64s(&mut r, nnz)?
        .into_iter()
        .map(|v| v as usize)
        .collect();
    let values = read_u64s(&mut r, nnz)?
        .into_iter()
        .map(f64::from_bits)
        .collect();
    CsrMatrix::try_from_parts(n_rows, n_cols, row_ptr, col_idx, values)
}

pub fn save_binary(path: impl AsRef<Path>, m: &CsrMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_binary(&mut w, m)?;
    w.flush()?;
    Ok(())
}

pub fn load_binary(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    read_binary(BufReader::new(File::open(path)?))
}
