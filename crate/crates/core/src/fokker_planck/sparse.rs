//! Compressed-row storage for the assembled generators.

use nalgebra::{ComplexField, DVector};

use crate::operator::banded::{BandMatrix, BandedLu};
use crate::operator::semigroup::{Generator, ShiftedSolve};
use crate::operator::RMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseOperator {
    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "entry ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_triplets(n, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.cols[k], self.vals[k]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let row = &self.cols[self.row_ptr[i]..self.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(k) => self.vals[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| {
            (self.row_ptr[i]..self.row_ptr[i + 1])
                .map(|k| self.vals[k] * x[self.cols[k]])
                .sum()
        })
    }

    pub fn add(&self, other: &SparseOperator) -> SparseOperator {
        assert_eq!(self.n, other.n);
        SparseOperator::from_triplets(self.n, self.triplets().chain(other.triplets()).collect())
    }

    /// `self + diag(d)`.
    pub fn add_diagonal(&self, d: &[f64]) -> SparseOperator {
        let extra = d.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(i, &v)| (i, i, v));
        SparseOperator::from_triplets(self.n, self.triplets().chain(extra).collect())
    }

    /// `diag(left) · self · diag(right)`.
    pub fn scaled(&self, left: &[f64], right: &[f64]) -> SparseOperator {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.vals[k] *= left[i] * right[self.cols[k]];
            }
        }
        out
    }

    pub fn transpose(&self) -> SparseOperator {
        SparseOperator::from_triplets(self.n, self.triplets().map(|(i, j, v)| (j, i, v)).collect())
    }

    pub fn to_dense(&self) -> RMatrix {
        let mut m = RMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// Lower and upper bandwidths.
    pub fn bandwidths(&self) -> (usize, usize) {
        self.triplets().fold((0, 0), |(kl, ku), (i, j, _)| {
            (kl.max(i.saturating_sub(j)), ku.max(j.saturating_sub(i)))
        })
    }

    /// `α·Id + β·self` in band storage, over any scalar field.
    pub fn to_band<T: ComplexField<RealField = f64>>(&self, alpha: T, beta: T) -> BandMatrix<T> {
        let (kl, ku) = self.bandwidths();
        let mut b = BandMatrix::zeros(self.n, kl, ku);
        for i in 0..self.n {
            b.add(i, i, alpha.clone());
        }
        for (i, j, v) in self.triplets() {
            b.add(i, j, beta.clone() * T::from_real(v));
        }
        b
    }

    /// `Σᵢ Aᵢⱼ` for every column.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for (_, j, v) in self.triplets() {
            s[j] += v;
        }
        s
    }

    /// Upper bound on the spectral norm: `sqrt(‖A‖₁ ‖A‖_∞)`.
    pub fn norm_bound(&self) -> f64 {
        let mut col = vec![0.0; self.n];
        let mut row_max: f64 = 0.0;
        for i in 0..self.n {
            let mut r = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                r += self.vals[k].abs();
                col[self.cols[k]] += self.vals[k].abs();
            }
            row_max = row_max.max(r);
        }
        (row_max * col.iter().copied().fold(0.0, f64::max)).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// `(Id − c·T)⁻¹` through a banded LU, with a backward-error check on
/// every solve.
pub struct CheckedBandSolve<'a> {
    op: &'a SparseOperator,
    c: f64,
    lu: BandedLu<f64>,
    tol: f64,
}

impl ShiftedSolve for CheckedBandSolve<'_> {
    fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let x = self.lu.solve(rhs);
        let resid = (&x - self.op.apply(&x) * self.c - rhs).amax();
        let scale = rhs.amax() + self.c.abs() * self.op.norm_bound() * x.amax();
        if !(resid <= self.tol * scale.max(f64::MIN_POSITIVE)) {
            return Err(Error::StepRejected {
                time: f64::NAN,
                reason: format!("implicit solve residual {resid:e} exceeds {:e}", self.tol * scale),
            });
        }
        Ok(x)
    }
}

/// A sparse generator with a residual tolerance for its implicit solves.
pub struct SparseGenerator<'a> {
    pub op: &'a SparseOperator,
    pub tol_solve: f64,
}

impl Generator for SparseGenerator<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.op.apply(x)
    }

    fn factor_implicit(&self, c: f64) -> Result<Box<dyn ShiftedSolve + '_>> {
        let lu = self.op.to_band(1.0, -c).factor()?;
        Ok(Box::new(CheckedBandSolve {
            op: self.op,
            c,
            lu,
            tol: self.tol_solve,
        }))
    }

    fn to_dense(&self) -> RMatrix {
        self.op.to_dense()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SparseOperator {
        SparseOperator::from_triplets(
            3,
            vec![(0, 0, -2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, -2.0), (1, 2, 1.0), (2, 1, 1.0), (2, 2, -2.0), (0, 0, 0.5)],
        )
    }

    #[test]
    fn triplets_are_merged_and_sorted() {
        let a = sample();
        assert_eq!(a.nnz(), 7);
        assert_eq!(a.get(0, 0), -1.5);
        assert_eq!(a.get(0, 2), 0.0);
        assert_eq!(a.bandwidths(), (1, 1));
    }

    #[test]
    fn apply_and_band_match_dense() {
        let a = sample();
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        assert_eq!(a.apply(&x), a.to_dense() * &x);
        let b: BandMatrix<f64> = a.to_band(1.0, -0.1);
        let expect = RMatrix::identity(3, 3) - a.to_dense() * 0.1;
        assert!((b.to_dense() - expect).amax() < 1e-15);
        assert!(a.norm_bound() >= a.to_dense().singular_values().max());
    }

    #[test]
    fn implicit_solver_checks_residual() {
        let a = sample();
        let g = SparseGenerator { op: &a, tol_solve: 1e-10 };
        let s = g.factor_implicit(0.3).unwrap();
        let rhs = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = s.solve(&rhs).unwrap();
        let back = &x - a.apply(&x) * 0.3;
        assert!((back - rhs).amax() < 1e-13);
    }
}
