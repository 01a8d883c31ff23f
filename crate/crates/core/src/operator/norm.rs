use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use super::space::{congruence, WeightedSpace};
use super::{shifted, RMatrix};
use crate::{Error, Result};

fn singular_values<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Result<DVector<f64>> {
    if m.is_empty() {
        return Ok(DVector::zeros(0));
    }
    let max_iter = 200 * m.nrows().max(m.ncols()).max(10);
    m.clone()
        .try_svd(false, false, f64::EPSILON, max_iter)
        .map(|svd| svd.singular_values)
        .ok_or(Error::NoConvergence { iterations: max_iter })
}

/// Largest singular value (unweighted spectral norm).
pub fn sigma_max<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Result<f64> {
    Ok(singular_values(m)?.iter().copied().fold(0.0, f64::max))
}

/// Smallest singular value of a square matrix.
pub fn sigma_min<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> Result<f64> {
    Ok(singular_values(m)?
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min))
}

/// Smallest singular value together with its right singular vector.
pub fn smallest_singular_triplet<T: ComplexField<RealField = f64>>(
    m: &DMatrix<T>,
) -> Result<(f64, DVector<T>)> {
    let max_iter = 200 * m.nrows().max(10);
    let svd = m
        .clone()
        .try_svd(false, true, f64::EPSILON, max_iter)
        .ok_or(Error::NoConvergence { iterations: max_iter })?;
    let (idx, &s) = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::invalid("empty matrix"))?;
    let v_t = svd.v_t.expect("requested");
    let v = v_t.row(idx).adjoint();
    Ok((s, v))
}

/// Largest singular value together with its right singular vector.
pub(crate) fn largest_singular_triplet<T: ComplexField<RealField = f64>>(
    m: &DMatrix<T>,
) -> Result<(f64, DVector<T>)> {
    let max_iter = 200 * m.nrows().max(10);
    let svd = m
        .clone()
        .try_svd(false, true, f64::EPSILON, max_iter)
        .ok_or(Error::NoConvergence { iterations: max_iter })?;
    let (idx, &s) = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::invalid("empty matrix"))?;
    let v_t = svd.v_t.expect("requested");
    Ok((s, v_t.row(idx).adjoint()))
}

/// Norm of `M : (dom, ‖·‖_dom) → (cod, ‖·‖_cod)`.
pub fn operator_norm<T: ComplexField<RealField = f64>>(
    m: &DMatrix<T>,
    dom: &WeightedSpace,
    cod: &WeightedSpace,
) -> Result<f64> {
    sigma_max(&congruence(m, dom, cod)?)
}

/// `‖(T − z)⁻¹‖_{ℒ(E)} = 1 / σ_min(Ť − z)` with `Ť` the congruence of `T`
/// in `E`. Errors with [`Error::Singular`] when `σ_min` falls under
/// `floor`.
pub fn resolvent_norm(t: &RMatrix, z: Complex64, space: &WeightedSpace, floor: f64) -> Result<f64> {
    let frame = congruence(t, space, space)?;
    let s = sigma_min(&shifted(&frame, z))?;
    if s <= floor {
        return Err(Error::Singular {
            point: z,
            distance: s,
        });
    }
    Ok(1.0 / s)
}

/// Spectral norm by power iteration on `MᴴM`; an independent check on
/// [`sigma_max`].
pub fn spectral_norm_power<T: ComplexField<RealField = f64>>(
    m: &DMatrix<T>,
    rel_tol: f64,
    max_iter: usize,
) -> f64 {
    let n = m.ncols();
    if n == 0 {
        return 0.0;
    }
    let gram = m.adjoint() * m;
    let mut x = DVector::from_fn(n, |i, _| T::from_real(1.0 + (i as f64 * 0.754_877_666).sin() * 0.5));
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let y = &gram * &x;
        let ny = y.norm();
        if ny == 0.0 {
            return 0.0;
        }
        let next = ny / x.norm();
        x = y.unscale(ny);
        if (next - lambda).abs() <= rel_tol * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}
