//! Matrix Market reader and writer.
//!
//! Supports the `array` format (dense, column-major) for `real` and
//! `complex` fields and the `coordinate real general` format for the sparse
//! Fokker-Planck generators. Symmetry qualifiers other than `general` are
//! expanded on read.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
    Hermitian,
}

/// A matrix read from disk. Real files come back as [`MarketMatrix::Real`].
#[derive(Debug, Clone, PartialEq)]
pub enum MarketMatrix {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

impl MarketMatrix {
    pub fn into_real(self) -> Result<DMatrix<f64>> {
        match self {
            MarketMatrix::Real(m) => Ok(m),
            MarketMatrix::Complex(_) => Err(Error::MatrixMarket(
                "expected a real matrix, found complex".into(),
            )),
        }
    }

    pub fn into_complex(self) -> DMatrix<Complex64> {
        match self {
            MarketMatrix::Real(m) => m.map(|x| Complex64::new(x, 0.0)),
            MarketMatrix::Complex(m) => m,
        }
    }
}

fn mm_err(msg: impl Into<String>) -> Error {
    Error::MatrixMarket(msg.into())
}

fn fmt_f64(x: f64) -> String {
    // shortest round-trip representation
    format!("{x:e}")
}

pub fn write_real_array<W: Write>(mut out: W, m: &DMatrix<f64>) -> Result<()> {
    let mut s = String::from("%%MatrixMarket matrix array real general\n");
    writeln!(s, "{} {}", m.nrows(), m.ncols()).unwrap();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s.push_str(&fmt_f64(m[(i, j)]));
            s.push('\n');
        }
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn write_complex_array<W: Write>(mut out: W, m: &DMatrix<Complex64>) -> Result<()> {
    let mut s = String::from("%%MatrixMarket matrix array complex general\n");
    writeln!(s, "{} {}", m.nrows(), m.ncols()).unwrap();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            writeln!(s, "{} {}", fmt_f64(z.re), fmt_f64(z.im)).unwrap();
        }
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// Coordinate format, skipping exact zeros. Entries are emitted row by row.
pub fn write_real_coordinate<W: Write>(
    mut out: W,
    nrows: usize,
    ncols: usize,
    entries: impl IntoIterator<Item = (usize, usize, f64)>,
) -> Result<()> {
    let body: Vec<_> = entries.into_iter().filter(|e| e.2 != 0.0).collect();
    let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
    writeln!(s, "{nrows} {ncols} {}", body.len()).unwrap();
    for (i, j, v) in body {
        if i >= nrows || j >= ncols {
            return Err(mm_err(format!("entry ({i}, {j}) outside {nrows}x{ncols}")));
        }
        writeln!(s, "{} {} {}", i + 1, j + 1, fmt_f64(v)).unwrap();
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn save_real(path: impl AsRef<Path>, m: &DMatrix<f64>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_real_array(std::io::BufWriter::new(f), m)
}

pub fn save_complex(path: impl AsRef<Path>, m: &DMatrix<Complex64>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_complex_array(std::io::BufWriter::new(f), m)
}

pub fn load(path: impl AsRef<Path>) -> Result<MarketMatrix> {
    read(std::fs::File::open(path)?)
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| mm_err(format!("line {line}: missing value")))?;
    tok.parse::<f64>()
        .map_err(|_| mm_err(format!("line {line}: cannot parse {tok:?}")))
}

fn parse_usize(tok: Option<&str>, line: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| mm_err(format!("line {line}: missing size")))?;
    tok.parse::<usize>()
        .map_err(|_| mm_err(format!("line {line}: cannot parse {tok:?}")))
}

pub fn read<R: Read>(input: R) -> Result<MarketMatrix> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| mm_err("empty file"))?;
    let header = header?;
    let head: Vec<String> = header
        .split_whitespace()
        .map(|t| t.to_ascii_lowercase())
        .collect();
    if head.len() != 5 || head[0] != "%%matrixmarket" || head[1] != "matrix" {
        return Err(mm_err(format!("bad header {header:?}")));
    }
    let dense = match head[2].as_str() {
        "array" => true,
        "coordinate" => false,
        other => return Err(mm_err(format!("unsupported format {other:?}"))),
    };
    let field = match head[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "complex" => Field::Complex,
        other => return Err(mm_err(format!("unsupported field {other:?}"))),
    };
    let symmetry = match head[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        "hermitian" => Symmetry::Hermitian,
        other => return Err(mm_err(format!("unsupported symmetry {other:?}"))),
    };

    let mut data = lines.filter_map(|(n, l)| match l {
        Ok(l) => {
            let t = l.trim();
            if t.is_empty() || t.starts_with('%') {
                None
            } else {
                Some(Ok((n + 1, t.to_string())))
            }
        }
        Err(e) => Some(Err(e)),
    });

    let (size_line, size) = data.next().ok_or_else(|| mm_err("missing size line"))??;
    let mut sizes = size.split_whitespace();
    let nrows = parse_usize(sizes.next(), size_line)?;
    let ncols = parse_usize(sizes.next(), size_line)?;
    let nnz = if dense {
        None
    } else {
        Some(parse_usize(sizes.next(), size_line)?)
    };
    if symmetry != Symmetry::General && nrows != ncols {
        return Err(mm_err("symmetric storage requires a square matrix"));
    }

    let mut m = DMatrix::<Complex64>::zeros(nrows, ncols);
    let mut place = |i: usize, j: usize, z: Complex64| {
        m[(i, j)] = z;
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => m[(j, i)] = z,
                Symmetry::SkewSymmetric => m[(j, i)] = -z,
                Symmetry::Hermitian => m[(j, i)] = z.conj(),
            }
        }
    };

    let read_value = |toks: &mut std::str::SplitWhitespace<'_>, n: usize| -> Result<Complex64> {
        let re = parse_f64(toks.next(), n)?;
        let im = match field {
            Field::Real => 0.0,
            Field::Complex => parse_f64(toks.next(), n)?,
        };
        Ok(Complex64::new(re, im))
    };

    if dense {
        let mut slots = Vec::new();
        for j in 0..ncols {
            let start = if symmetry == Symmetry::General {
                0
            } else if symmetry == Symmetry::SkewSymmetric {
                j + 1
            } else {
                j
            };
            for i in start..nrows {
                slots.push((i, j));
            }
        }
        let mut count = 0;
        for entry in data.by_ref() {
            let (n, line) = entry?;
            if count >= slots.len() {
                return Err(mm_err(format!("line {n}: more entries than declared")));
            }
            let mut toks = line.split_whitespace();
            let z = read_value(&mut toks, n)?;
            let (i, j) = slots[count];
            place(i, j, z);
            count += 1;
        }
        if count != slots.len() {
            return Err(mm_err(format!(
                "expected {} entries, found {count}",
                slots.len()
            )));
        }
    } else {
        let nnz = nnz.unwrap();
        let mut count = 0;
        for entry in data.by_ref() {
            let (n, line) = entry?;
            let mut toks = line.split_whitespace();
            let i = parse_usize(toks.next(), n)?;
            let j = parse_usize(toks.next(), n)?;
            if i == 0 || j == 0 || i > nrows || j > ncols {
                return Err(mm_err(format!("line {n}: index ({i}, {j}) out of range")));
            }
            let z = read_value(&mut toks, n)?;
            place(i - 1, j - 1, z);
            count += 1;
        }
        if count != nnz {
            return Err(mm_err(format!("expected {nnz} entries, found {count}")));
        }
    }

    Ok(match field {
        Field::Real => MarketMatrix::Real(m.map(|z| z.re)),
        Field::Complex => MarketMatrix::Complex(m),
    })
}
