//! Spectral gap of the symmetric part in `H = L²(μ⁻¹)`.
//!
//! The similarity `S = μ^{−1/2} 𝒯ˢ μ^{1/2}` is symmetric. In one dimension
//! it is tridiagonal and the top of its spectrum is located by Sturm
//! bisection; in two dimensions a dense symmetric eigensolve is used.

use nalgebra::{DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::discretization::FPDiscretization;
use crate::operator::banded::BandMatrix;
pub use crate::operator::tridiagonal::{gershgorin, kth_largest, sturm_count};
use crate::{Error, Result, Tolerances};

/// Largest dense problem accepted for the two-dimensional eigensolve.
pub const DENSE_LIMIT: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapMethod {
    SturmBisection,
    DenseSymmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGap {
    /// Top eigenvalue; zero up to rounding.
    pub top: f64,
    /// Second eigenvalue, the discrete Poincaré constant `λ_P < 0`.
    pub lambda_p: f64,
    /// Lowest eigenvalue (Gershgorin bracket in one dimension).
    pub bottom: f64,
    /// `‖S √μ‖∞ / (‖S‖ ‖√μ‖∞)`.
    pub null_residual: f64,
    pub method: GapMethod,
}

/// Diagonal and off-diagonal of the symmetrized tridiagonal matrix.
pub fn symmetrized_tridiagonal(disc: &FPDiscretization) -> Result<(Vec<f64>, Vec<f64>)> {
    if disc.grid.d != 1 {
        return Err(Error::invalid("tridiagonal symmetrization needs d = 1"));
    }
    let n = disc.dim();
    let t = &disc.symmetric;
    let diag = (0..n).map(|i| t.get(i, i)).collect();
    let off = (0..n - 1)
        .map(|i| (t.get(i, i + 1) * t.get(i + 1, i)).sqrt())
        .collect();
    Ok((diag, off))
}

fn null_residual(disc: &FPDiscretization) -> f64 {
    let sqrt_mu: Vec<f64> = disc.mu.iter().map(|m| m.sqrt()).collect();
    let inv: Vec<f64> = sqrt_mu.iter().map(|s| 1.0 / s).collect();
    let s = disc.symmetric.scaled(&inv, &sqrt_mu);
    let v = DVector::from_vec(sqrt_mu);
    s.apply(&v).amax() / (s.norm_bound() * v.amax())
}

/// Top two eigenvalues of the symmetrized `𝒯ˢ`; fails if the top one is not
/// zero within `tol.eig` relative to the operator scale.
pub fn spectral_gap_h(disc: &FPDiscretization, tol: &Tolerances) -> Result<SpectralGap> {
    let scale = disc.symmetric.norm_bound().max(1.0);
    let gap = match disc.grid.d {
        1 => {
            let (diag, off) = symmetrized_tridiagonal(disc)?;
            SpectralGap {
                top: kth_largest(&diag, &off, 1),
                lambda_p: kth_largest(&diag, &off, 2),
                bottom: gershgorin(&diag, &off).0,
                null_residual: null_residual(disc),
                method: GapMethod::SturmBisection,
            }
        }
        _ => {
            let vals = dense_symmetrized_eigenvalues(disc)?;
            let n = vals.len();
            SpectralGap {
                top: vals[n - 1],
                lambda_p: vals[n - 2],
                bottom: vals[0],
                null_residual: null_residual(disc),
                method: GapMethod::DenseSymmetric,
            }
        }
    };
    if gap.top.abs() > tol.eig * scale || gap.null_residual > tol.eig {
        return Err(Error::Assembly(format!(
            "top eigenvalue {:e} (null residual {:e}) is not zero at scale {scale:e}",
            gap.top, gap.null_residual
        )));
    }
    if gap.lambda_p >= -tol.eig * scale {
        return Err(Error::Assembly(format!(
            "second eigenvalue {:e} is not separated from zero",
            gap.lambda_p
        )));
    }
    Ok(gap)
}

/// Ascending eigenvalues of the dense symmetrized operator.
pub fn dense_symmetrized_eigenvalues(disc: &FPDiscretization) -> Result<Vec<f64>> {
    let n = disc.dim();
    if n > DENSE_LIMIT {
        return Err(Error::invalid(format!(
            "dense eigensolve limited to {DENSE_LIMIT} unknowns, got {n}"
        )));
    }
    let sqrt_mu: Vec<f64> = disc.mu.iter().map(|m| m.sqrt()).collect();
    let inv: Vec<f64> = sqrt_mu.iter().map(|s| 1.0 / s).collect();
    let mut s = disc.symmetric.scaled(&inv, &sqrt_mu).to_dense();
    s = (&s + s.transpose()) * 0.5;
    let mut vals: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Eigenvector of `𝒯ˢ` for `λ_P`, H-normalized and H-orthogonal to `μ`.
pub fn poincare_mode(disc: &FPDiscretization, gap: &SpectralGap) -> Result<DVector<f64>> {
    let n = disc.dim();
    let sqrt_mu: Vec<f64> = disc.mu.iter().map(|m| m.sqrt()).collect();
    let inv: Vec<f64> = sqrt_mu.iter().map(|s| 1.0 / s).collect();
    let s = disc.symmetric.scaled(&inv, &sqrt_mu);
    let shift = gap.lambda_p + 1e-9 * gap.lambda_p.abs().max(1.0);
    let band: BandMatrix<f64> = s.to_band(-shift, 1.0);
    let lu = band.factor()?;
    let root = DVector::from_vec(sqrt_mu.clone());
    let mut v = DVector::from_fn(n, |i, _| (i as f64 / n as f64 - 0.37).sin());
    v -= &root * (root.dot(&v) / root.norm_squared());
    v /= v.norm();
    for _ in 0..50 {
        let mut w = lu.solve(&v);
        w -= &root * (root.dot(&w) / root.norm_squared());
        let nw = w.norm();
        if !(nw.is_finite() && nw > 0.0) {
            return Err(Error::NoConvergence { iterations: 50 });
        }
        let next = w / nw;
        let done = (next.dot(&v).abs() - 1.0).abs() < 1e-15;
        v = next;
        if done {
            break;
        }
    }
    // back to f: f = μ^{1/2} v; the H-norm of f is |v| h^{d/2}
    let cell = disc.grid.cell_volume().sqrt();
    Ok(DVector::from_fn(n, |i, _| sqrt_mu[i] * v[i] / cell))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fokker_planck::discretization::Grid;
    use crate::fokker_planck::model::{Potential, SwirlField};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn disc(p: Potential, l: f64, n: usize) -> FPDiscretization {
        FPDiscretization::new(Grid::new(1, n, l).unwrap(), p, SwirlField::none()).unwrap()
    }

    #[test]
    fn sturm_matches_dense() {
        let d = disc(Potential::radial(2.0).unwrap(), 8.0, 120);
        let gap = spectral_gap_h(&d, &Tolerances::default()).unwrap();
        let vals = dense_symmetrized_eigenvalues(&d).unwrap();
        assert_relative_eq!(gap.lambda_p, vals[118], max_relative = 1e-10);
        assert!(gap.top.abs() < 1e-8);
    }

    #[test]
    fn neumann_gap_for_flat_potential() {
        let l = 2.0;
        let d = disc(Potential::Flat, l, 800);
        let gap = spectral_gap_h(&d, &Tolerances::default()).unwrap();
        let exact = -(PI / (2.0 * l)).powi(2);
        assert!((gap.lambda_p / exact - 1.0).abs() < 1e-5, "{}", gap.lambda_p);
    }

    #[test]
    fn ornstein_uhlenbeck_gap_converges() {
        let coarse = spectral_gap_h(&disc(Potential::radial(2.0).unwrap(), 8.0, 200), &Tolerances::default()).unwrap();
        let fine = spectral_gap_h(&disc(Potential::radial(2.0).unwrap(), 8.0, 400), &Tolerances::default()).unwrap();
        let e1 = (coarse.lambda_p + 2.0).abs();
        let e2 = (fine.lambda_p + 2.0).abs();
        assert!(e2 < 0.01);
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "{ratio}");
    }

    #[test]
    fn poincare_mode_is_an_eigenvector() {
        let d = disc(Potential::radial(2.0).unwrap(), 8.0, 300);
        let gap = spectral_gap_h(&d, &Tolerances::default()).unwrap();
        let v = poincare_mode(&d, &gap).unwrap();
        let r = d.symmetric.apply(&v) - &v * gap.lambda_p;
        let h = d.small_space().unwrap();
        assert!(h.norm(&r).unwrap() < 1e-8, "{}", h.norm(&r).unwrap());
        assert_relative_eq!(h.norm(&v).unwrap(), 1.0, epsilon = 1e-12);
        assert!(d.mass(&v).abs() < 1e-10);
    }
}
