//! CSV tables with a header row: trajectories, scans and vectors.

use std::io::Write;
use std::path::Path;

use crate::{Error, Result};

/// A column-major table of floating point columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|s| s.to_string()).collect(),
            columns: vec![Vec::new(); headers.len()],
        }
    }

    pub fn push_row(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.headers.len() {
            return Err(Error::DimensionMismatch {
                expected: self.headers.len(),
                actual: row.len(),
            });
        }
        for (col, &v) in self.columns.iter_mut().zip(row) {
            col.push(v);
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        let idx = self.headers.iter().position(|h| h == name)?;
        Some(&self.columns[idx])
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers)?;
        let mut rec = Vec::with_capacity(self.headers.len());
        for r in 0..self.rows() {
            rec.clear();
            rec.extend(self.columns.iter().map(|c| format!("{:e}", c[r])));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write(std::fs::File::create(path)?)
    }

    pub fn read<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let headers: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut table = Table {
            columns: vec![Vec::new(); headers.len()],
            headers,
        };
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::invalid(format!("csv: cannot parse {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            table.push_row(&row)?;
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read(std::fs::File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut t = Table::new(&["t", "norm_H"]);
        t.push_row(&[0.0, 1.0]).unwrap();
        t.push_row(&[0.1, std::f64::consts::PI]).unwrap();
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        assert!(buf.starts_with(b"t,norm_H\n"));
        assert_eq!(Table::read(&buf[..]).unwrap(), t);
    }

    #[test]
    fn ragged_rows_are_rejected() {
        let mut t = Table::new(&["a", "b"]);
        assert!(t.push_row(&[1.0]).is_err());
        assert!(Table::read("a,b\n1,x\n".as_bytes()).is_err());
    }
}
