//! The `SPRD1` matrix file format.
//!
//! ```text
//! SPRD1
//! <rows>
//! <cols>
//! float64 | rational
//! <body>
//! ```
//!
//! A `float64` body is rows × cols little-endian doubles, row-major. A
//! `rational` body is one `num/den` literal per line, row-major.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::matrix::DenseMatrix;
use super::rational::{parse_rational, RationalMatrix};

pub const MAGIC: &str = "SPRD1";

/// A matrix read from disk.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixFile {
    Dense(DenseMatrix),
    Rational(RationalMatrix),
}

impl MatrixFile {
    /// Dense view; rational matrices are rounded to the nearest double.
    pub fn into_dense(self) -> DenseMatrix {
        match self {
            MatrixFile::Dense(m) => m,
            MatrixFile::Rational(r) => r.to_dense(),
        }
    }

    pub fn into_rational(self) -> Result<RationalMatrix> {
        match self {
            MatrixFile::Rational(r) => Ok(r),
            MatrixFile::Dense(_) => Err(Error::Format("expected a rational matrix".into())),
        }
    }
}

pub fn encode_dense(m: &DenseMatrix) -> Vec<u8> {
    let mut out = format!("{MAGIC}\n{}\n{}\nfloat64\n", m.rows(), m.cols()).into_bytes();
    out.reserve(8 * m.as_slice().len());
    for x in m.as_slice() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn encode_rational(m: &RationalMatrix) -> Vec<u8> {
    let mut out = format!("{MAGIC}\n{}\n{}\nrational\n", m.rows(), m.cols());
    for x in m.entries() {
        out.push_str(&format!("{}/{}\n", x.numer(), x.denom()));
    }
    out.into_bytes()
}

fn next_line<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    let rest = &bytes[*pos..];
    let end = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::Format("truncated header".into()))?;
    *pos += end + 1;
    std::str::from_utf8(&rest[..end])
        .map(str::trim_end)
        .map_err(|_| Error::Format("header is not UTF-8".into()))
}

fn parse_count(s: &str, what: &str) -> Result<usize> {
    let v: usize = s.trim().parse().map_err(|_| Error::Format(format!("bad {what} {s:?}")))?;
    if v == 0 {
        return Err(Error::Format(format!("{what} must be positive")));
    }
    Ok(v)
}

pub fn decode(bytes: &[u8]) -> Result<MatrixFile> {
    let mut pos = 0;
    let magic = next_line(bytes, &mut pos)?;
    if magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let rows = parse_count(next_line(bytes, &mut pos)?, "rows")?;
    let cols = parse_count(next_line(bytes, &mut pos)?, "cols")?;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("shape overflows".into()))?;
    match next_line(bytes, &mut pos)? {
        "float64" => {
            let body = &bytes[pos..];
            if body.len() != 8 * count {
                return Err(Error::Format(format!("expected {} body bytes, found {}", 8 * count, body.len())));
            }
            let data = body
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            Ok(MatrixFile::Dense(DenseMatrix::new(rows, cols, data)?))
        }
        "rational" => {
            let text = std::str::from_utf8(&bytes[pos..]).map_err(|_| Error::Format("body is not UTF-8".into()))?;
            let data = text
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(parse_rational)
                .collect::<Result<Vec<_>>>()?;
            if data.len() != count {
                return Err(Error::Format(format!("expected {count} entries, found {}", data.len())));
            }
            Ok(MatrixFile::Rational(RationalMatrix::new(rows, cols, data)?))
        }
        other => Err(Error::Format(format!("unknown flag {other:?}"))),
    }
}

pub fn read_matrix(path: &Path) -> Result<MatrixFile> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn write_dense(w: &mut impl Write, m: &DenseMatrix) -> Result<()> {
    w.write_all(&encode_dense(m))?;
    Ok(())
}

pub fn write_rational(w: &mut impl Write, m: &RationalMatrix) -> Result<()> {
    w.write_all(&encode_rational(m))?;
    Ok(())
}
