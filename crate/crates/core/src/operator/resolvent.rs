use num_complex::Complex64;

use super::norm::{sigma_max, sigma_min};
use super::{check_square, shifted, CMatrix, RMatrix};
use crate::{Error, Result};

/// `R(ξ) = (T − ξ)⁻¹`.
///
/// Rejects `ξ` whose relative distance to the spectrum (`σ_min/σ_max` of
/// `T − ξ`) is under `tol_solve`, and checks the returned inverse against
/// `‖(T−ξ)R − Id‖ ≤ tol_solve · cond(T−ξ)`.
pub fn resolvent(t: &RMatrix, xi: Complex64, tol_solve: f64) -> Result<CMatrix> {
    let n = check_square(t)?;
    let a = shifted(t, xi);
    let smax = sigma_max(&a)?;
    let smin = sigma_min(&a)?;
    if smin <= tol_solve * smax.max(f64::MIN_POSITIVE) {
        return Err(Error::Singular {
            point: xi,
            distance: smin,
        });
    }
    let r = a.clone().lu().try_inverse().ok_or(Error::Singular {
        point: xi,
        distance: smin,
    })?;
    let residual = sigma_max(&(&a * &r - CMatrix::identity(n, n)))?;
    let cond = smax / smin;
    if residual > tol_solve * cond.max(1.0) {
        return Err(Error::Singular {
            point: xi,
            distance: smin,
        });
    }
    Ok(r)
}
