//! Banded LU with partial pivoting, for the sparse generators of the
//! Fokker-Planck discretization. Storage keeps `kl` extra super-diagonals
//! for pivoting fill-in, as in LAPACK's `gbtrf`.

use nalgebra::{ComplexField, DMatrix, DVector};

use super::semigroup::ShiftedSolve;
use super::tridiagonal::kth_largest;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<T>,
}

impl<T: ComplexField<RealField = f64>> BandMatrix<T> {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![T::zero(); n * width],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.kl + self.ku || i >= self.n || j >= self.n {
            return None;
        }
        Some(i * self.width + (j + self.kl - i))
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.slot(i, j)
            .map(|s| self.data[s].clone())
            .unwrap_or_else(T::zero)
    }

    /// Panics outside the declared band.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(
            j + self.kl >= i && j <= i + self.ku,
            "entry ({i}, {j}) outside band ({}, {})",
            self.kl,
            self.ku
        );
        let s = self.slot(i, j).expect("in band");
        self.data[s] += v;
    }

    pub fn from_dense(m: &DMatrix<T>, kl: usize, ku: usize) -> Self {
        let n = m.nrows();
        let mut b = Self::zeros(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                b.add(i, j, m[(i, j)].clone());
            }
        }
        b
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn apply(&self, x: &DVector<T>) -> DVector<T> {
        let mut y = DVector::zeros(self.n);
        for i in 0..self.n {
            let mut acc = T::zero();
            for j in i.saturating_sub(self.kl)..(i + self.ku + 1).min(self.n) {
                acc += self.get(i, j) * x[j].clone();
            }
            y[i] = acc;
        }
        y
    }

    /// `A − z·Id`.
    pub fn shifted(&self, z: T) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            out.add(i, i, -z.clone());
        }
        out
    }

    pub fn factor(self) -> Result<BandedLu<T>> {
        BandedLu::new(self)
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    a: BandMatrix<T>,
    pivots: Vec<usize>,
}

impl<T: ComplexField<RealField = f64>> BandedLu<T> {
    fn new(mut a: BandMatrix<T>) -> Result<Self> {
        let n = a.n;
        let (kl, ku) = (a.kl, a.ku);
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.get(k, k).modulus();
            for i in k + 1..=last_row {
                let v = a.get(i, k).modulus();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::invalid(format!("banded LU: zero pivot in column {k}")));
            }
            pivots[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (sk, sp) = (a.slot(k, j).unwrap(), a.slot(p, j).unwrap());
                    a.data.swap(sk, sp);
                }
            }
            let pivot = a.get(k, k);
            for i in k + 1..=last_row {
                let si = a.slot(i, k).unwrap();
                let l = a.data[si].clone() / pivot.clone();
                a.data[si] = l.clone();
                if l == T::zero() {
                    continue;
                }
                for j in k + 1..=last_col {
                    let akj = a.get(k, j);
                    let s = a.slot(i, j).unwrap();
                    a.data[s] -= l.clone() * akj;
                }
            }
        }
        Ok(Self { a, pivots })
    }

    pub fn dim(&self) -> usize {
        self.a.n
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &DVector<T>) -> DVector<T> {
        let n = self.a.n;
        let (kl, ku) = (self.a.kl, self.a.ku);
        let mut x = b.clone();
        for k in 0..n {
            x.swap_rows(k, self.pivots[k]);
            let xk = x[k].clone();
            for i in k + 1..(k + kl + 1).min(n) {
                x[i] -= self.a.get(i, k) * xk.clone();
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k].clone();
            for j in k + 1..(k + kl + ku + 1).min(n) {
                acc -= self.a.get(k, j) * x[j].clone();
            }
            x[k] = acc / self.a.get(k, k);
        }
        x
    }

    /// Solve `Aᴴ x = b`.
    pub fn solve_adjoint(&self, b: &DVector<T>) -> DVector<T> {
        let n = self.a.n;
        let (kl, ku) = (self.a.kl, self.a.ku);
        let mut x = b.clone();
        // Uᴴ y = b
        for k in 0..n {
            let mut acc = x[k].clone();
            for i in k.saturating_sub(kl + ku)..k {
                acc -= self.a.get(i, k).conjugate() * x[i].clone();
            }
            x[k] = acc / self.a.get(k, k).conjugate();
        }
        // then the unit-lower factors and interchanges in reverse
        for k in (0..n).rev() {
            let mut acc = x[k].clone();
            for i in k + 1..(k + kl + 1).min(n) {
                acc -= self.a.get(i, k).conjugate() * x[i].clone();
            }
            x[k] = acc;
            x.swap_rows(k, self.pivots[k]);
        }
        x
    }
}

impl ShiftedSolve for BandedLu<f64> {
    fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(BandedLu::solve(self, rhs))
    }
}

/// Outcome of [`smallest_singular_value`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaMinEstimate {
    pub sigma_min: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `σ_min(A)` from the top eigenvalue of `(AᴴA)⁻¹`, found by Lanczos with
/// full reorthogonalization and two banded solves per step. Ritz values
/// increase towards `σ_min⁻²`, so an unconverged estimate over-estimates
/// `σ_min`.
pub fn smallest_singular_value<T: ComplexField<RealField = f64>>(
    lu: &BandedLu<T>,
    rel_tol: f64,
    max_iter: usize,
) -> SigmaMinEstimate {
    let n = lu.dim();
    let steps = max_iter.min(n).max(1);
    let mut q = DVector::from_fn(n, |i, _| {
        T::from_real(1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_75).fract())
    });
    q /= T::from_real(q.norm());
    let mut basis: Vec<DVector<T>> = Vec::with_capacity(steps);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut est = 0.0;
    let mut stable = 0;
    for it in 1..=steps {
        let mut w = lu.solve_adjoint(&lu.solve(&q));
        if w.iter().any(|x| !x.clone().modulus().is_finite()) {
            return SigmaMinEstimate {
                sigma_min: 0.0,
                iterations: it,
                converged: true,
            };
        }
        let a = q.dotc(&w).real();
        basis.push(q.clone());
        alpha.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c = v.dotc(&w);
                w -= v * c;
            }
        }
        let b = w.norm();
        let k = alpha.len();
        let top = kth_largest(&alpha, &beta[..k - 1], 1);
        if !(top > 0.0) {
            return SigmaMinEstimate {
                sigma_min: f64::INFINITY,
                iterations: it,
                converged: false,
            };
        }
        let invariant = b <= 1e-14 * top;
        if (top - est).abs() <= rel_tol * top {
            stable += 1;
        } else {
            stable = 0;
        }
        est = top;
        if invariant || stable >= 2 || it == n {
            return SigmaMinEstimate {
                sigma_min: 1.0 / top.sqrt(),
                iterations: it,
                converged: true,
            };
        }
        beta.push(b);
        q = w / T::from_real(b);
    }
    SigmaMinEstimate {
        sigma_min: 1.0 / est.sqrt(),
        iterations: steps,
        converged: false,
    }
}
