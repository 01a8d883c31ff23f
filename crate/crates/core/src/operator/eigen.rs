use nalgebra::{DVector, Schur};
use num_complex::Complex64;

use super::norm::sigma_max;
use super::{check_square, complexify, CMatrix, RMatrix};
use crate::{Error, Result};

/// Eigenvalues with unit right eigenvectors (`T v = λ v`) and left
/// eigenvectors (`wᴴ T = λ wᴴ`), ordered by decreasing real part, then
/// decreasing imaginary part.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    /// Column `j` pairs with `values[j]`.
    pub right: CMatrix,
    /// Column `j` pairs with `values[j]`.
    pub left: CMatrix,
    /// `max_j ‖T vⱼ − λⱼ vⱼ‖`.
    pub max_residual: f64,
}

/// Complex Schur form `T = Q S Qᴴ`, then triangular back-substitution for
/// eigenvectors of `S`. Fails if the QR iteration does not converge or a
/// residual exceeds `tol_eig · max(‖T‖, 1)`.
pub fn eigen_decompose(t: &RMatrix, tol_eig: f64) -> Result<EigenDecomposition> {
    let n = check_square(t)?;
    if t.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("operator has non-finite entries"));
    }
    if n == 0 {
        return Ok(EigenDecomposition {
            values: vec![],
            right: CMatrix::zeros(0, 0),
            left: CMatrix::zeros(0, 0),
            max_residual: 0.0,
        });
    }
    let tc = complexify(t);
    let max_iter = 100 * n.max(10);
    let schur = Schur::try_new(tc.clone(), f64::EPSILON, max_iter)
        .ok_or(Error::NoConvergence { iterations: max_iter })?;
    let (q, s) = schur.unpack();

    let snorm = s.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let smin = (f64::EPSILON * snorm).max(f64::MIN_POSITIVE);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (s[(i, i)], s[(j, j)]);
        b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im))
    });

    let mut values = Vec::with_capacity(n);
    let mut right = CMatrix::zeros(n, n);
    let mut left = CMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        let lambda = s[(i, i)];
        values.push(lambda);

        // S y = λ y with y_i = 1, y_j = 0 for j > i.
        let mut y = DVector::<Complex64>::zeros(n);
        y[i] = Complex64::new(1.0, 0.0);
        for j in (0..i).rev() {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in j + 1..=i {
                acc += s[(j, k)] * y[k];
            }
            y[j] = -acc / guarded(s[(j, j)] - lambda, smin);
        }
        let v = &q * y;
        right.set_column(col, &v.unscale(v.norm()));

        // Sᴴ z = conj(λ) z with z_i = 1, z_j = 0 for j < i.
        let mut z = DVector::<Complex64>::zeros(n);
        z[i] = Complex64::new(1.0, 0.0);
        for j in i + 1..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in i..j {
                acc += s[(k, j)].conj() * z[k];
            }
            z[j] = -acc / guarded((s[(j, j)] - lambda).conj(), smin);
        }
        let w = &q * z;
        left.set_column(col, &w.unscale(w.norm()));
    }

    let mut max_residual: f64 = 0.0;
    for j in 0..n {
        let v = right.column(j);
        let r = &tc * v - v * values[j];
        max_residual = max_residual.max(r.norm());
    }
    let scale = sigma_max(t)?.max(1.0);
    if max_residual > tol_eig * scale {
        return Err(Error::invalid(format!(
            "eigen-residual {max_residual:.3e} exceeds {:.3e}",
            tol_eig * scale
        )));
    }
    Ok(EigenDecomposition {
        values,
        right,
        left,
        max_residual,
    })
}

fn guarded(d: Complex64, smin: f64) -> Complex64 {
    if d.norm() < smin {
        Complex64::new(smin, 0.0)
    } else {
        d
    }
}
