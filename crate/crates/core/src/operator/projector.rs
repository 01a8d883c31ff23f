use num_complex::Complex64;
use std::f64::consts::PI;

use super::eigen::{eigen_decompose, EigenDecomposition};
use super::norm::{sigma_max, sigma_min};
use super::{check_square, shifted, CMatrix, RMatrix};
use crate::{Error, Result, Tolerances};

/// Riesz projector for the eigenvalues enclosed by `|z − center| = radius`,
/// computed by contour quadrature and, when the enclosed group is
/// diagonalizable, by biorthogonal eigenvectors.
#[derive(Debug, Clone)]
pub struct ProjectorResult {
    /// Contour quadrature result.
    pub projector: CMatrix,
    /// `V_g (W_gᴴ V_g)⁻¹ W_gᴴ`; `None` when the enclosed group is defective
    /// and not the whole spectrum.
    pub eigen_route: Option<CMatrix>,
    /// Relative spectral-norm distance between the two routes.
    pub discrepancy: Option<f64>,
    /// Algebraic multiplicity enclosed.
    pub rank: usize,
    pub enclosed: Vec<Complex64>,
    pub quadrature_points: usize,
}

pub fn spectral_projector(
    t: &RMatrix,
    center: Complex64,
    radius: f64,
    tol: &Tolerances,
) -> Result<ProjectorResult> {
    let eig = eigen_decompose(t, tol.eig)?;
    spectral_projector_with(t, &eig, center, radius, tol)
}

/// As [`spectral_projector`] with a precomputed decomposition.
pub fn spectral_projector_with(
    t: &RMatrix,
    eig: &EigenDecomposition,
    center: Complex64,
    radius: f64,
    tol: &Tolerances,
) -> Result<ProjectorResult> {
    let n = check_square(t)?;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::invalid(format!("contour radius {radius} must be positive")));
    }
    let sep = (1e-6 * radius).max(tol.eig * sigma_max(t)?.max(1.0));
    // convergence factor of the periodic trapezoid rule
    let mut rho: f64 = 0.0;
    for &lambda in &eig.values {
        let d = (lambda - center).norm();
        if (d - radius).abs() < sep {
            return Err(Error::Separation {
                center,
                radius,
                eigenvalue: lambda,
                gap: (d - radius).abs(),
            });
        }
        let ratio = if d < radius { d / radius } else { radius / d };
        rho = rho.max(ratio);
    }

    let mut points = tol.contour_points.max(8);
    if rho > 0.0 {
        let needed = ((1e-3 * tol.proj).ln() / rho.ln()).ceil();
        if needed.is_finite() && needed > points as f64 {
            points = (needed as usize).min(4096);
        }
    }
    let projector = contour_projector(t, center, radius, points)?;

    let group: Vec<usize> = (0..n)
        .filter(|&j| (eig.values[j] - center).norm() < radius)
        .collect();
    let enclosed = group.iter().map(|&j| eig.values[j]).collect();
    let eigen_route = eigen_projector(eig, &group, n)?;

    let discrepancy = match &eigen_route {
        Some(pe) => {
            let d = sigma_max(&(&projector - pe))? / sigma_max(pe)?.max(1.0);
            if d > tol.proj {
                return Err(Error::ProjectorMismatch {
                    discrepancy: d,
                    tolerance: tol.proj,
                });
            }
            Some(d)
        }
        None => None,
    };

    Ok(ProjectorResult {
        projector,
        eigen_route,
        discrepancy,
        rank: group.len(),
        enclosed,
        quadrature_points: points,
    })
}

/// `Π = (1/2πi) ∮ (z − T)⁻¹ dz` with `z_k = c + r e^{iθ_k}`, which
/// reduces to `(r/n) Σ e^{iθ_k} (z_k − T)⁻¹`.
fn contour_projector(t: &RMatrix, center: Complex64, radius: f64, points: usize) -> Result<CMatrix> {
    let n = t.nrows();
    let mut acc = CMatrix::zeros(n, n);
    for k in 0..points {
        let theta = 2.0 * PI * (k as f64 + 0.5) / points as f64;
        let phase = Complex64::from_polar(1.0, theta);
        let z = center + phase * radius;
        // (z − T)⁻¹ = −(T − z)⁻¹
        let inv = shifted(t, z).lu().try_inverse().ok_or(Error::Singular {
            point: z,
            distance: 0.0,
        })?;
        acc -= inv * phase;
    }
    Ok(acc * Complex64::new(radius / points as f64, 0.0))
}

fn eigen_projector(eig: &EigenDecomposition, group: &[usize], n: usize) -> Result<Option<CMatrix>> {
    let m = group.len();
    if m == 0 {
        return Ok(Some(CMatrix::zeros(n, n)));
    }
    if m == n {
        return Ok(Some(CMatrix::identity(n, n)));
    }
    let v = CMatrix::from_fn(n, m, |i, j| eig.right[(i, group[j])]);
    let w = CMatrix::from_fn(n, m, |i, j| eig.left[(i, group[j])]);
    let gram = w.adjoint() * &v;
    let (smin, smax) = (sigma_min(&gram)?, sigma_max(&gram)?);
    if smin <= 1e-8 * smax {
        // defective group: eigenvectors do not span the invariant subspace
        return Ok(None);
    }
    let ginv = gram.lu().try_inverse().ok_or_else(|| Error::invalid("singular Gram matrix"))?;
    Ok(Some(v * ginv * w.adjoint()))
}
