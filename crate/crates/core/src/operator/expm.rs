//! Matrix exponential by scaling and squaring with a degree-13 Padé
//! approximant.

use nalgebra::{ComplexField, DMatrix};

use super::check_square;
use crate::{Error, Result};

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// Largest 1-norm for which the [13/13] approximant is accurate to unit
/// roundoff without scaling.
const THETA13: f64 = 5.371_920_351_148_152;

fn norm1<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|x| x.clone().modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^{A}`. Errors with [`Error::MagnitudeGuard`] (time reported as 1) if
/// the result overflows.
pub fn expm<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = check_square(a)?;
    if a.iter().any(|x| !x.clone().modulus().is_finite()) {
        return Err(Error::invalid("matrix exponential of non-finite matrix"));
    }
    let norm = norm1(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scale = T::from_real(0.5f64.powi(squarings));
    let a = a * scale;

    let id = DMatrix::<T>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| T::from_real(PADE13[k]);

    let inner_u = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9));
    let u = &a * (inner_u + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1));
    let inner_v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8));
    let v = inner_v + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);

    let mut r = (&v - &u)
        .lu()
        .solve(&(&v + &u))
        .ok_or_else(|| Error::invalid("singular Padé denominator"))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    if r.iter().any(|x| !x.clone().modulus().is_finite() || x.clone().modulus() > 1e300) {
        return Err(Error::MagnitudeGuard { time: 1.0 });
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, DMatrix};
    use num_complex::Complex64;

    #[test]
    fn zero_is_identity() {
        let e = expm(&DMatrix::<f64>::zeros(3, 3)).unwrap();
        assert_relative_eq!(e, DMatrix::identity(3, 3), epsilon = 1e-15);
    }

    #[test]
    fn diagonal() {
        let e = expm(&dmatrix![0.0, 0.0; 0.0, -1.0]).unwrap();
        assert_relative_eq!(e[(1, 1)], (-1f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(e[(0, 0)], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn nilpotent_is_id_plus_t() {
        let e = expm(&dmatrix![0.0, 2.0; 0.0, 0.0]).unwrap();
        assert_relative_eq!(e, dmatrix![1.0, 2.0; 0.0, 1.0], epsilon = 1e-14);
    }

    #[test]
    fn rotation_generator() {
        let t = 2.5;
        let e = expm(&dmatrix![0.0, -t; t, 0.0]).unwrap();
        assert_relative_eq!(e[(0, 0)], t.cos(), epsilon = 1e-13);
        assert_relative_eq!(e[(1, 0)], t.sin(), epsilon = 1e-13);
    }

    #[test]
    fn large_norm_needs_squaring() {
        let e = expm(&dmatrix![-40.0, 0.0; 0.0, 30.0]).unwrap();
        assert_relative_eq!(e[(0, 0)], (-40f64).exp(), max_relative = 1e-12);
        assert_relative_eq!(e[(1, 1)], 30f64.exp(), max_relative = 1e-12);
    }

    #[test]
    fn complex_scalar() {
        let z = Complex64::new(-0.3, 2.0);
        let e = expm(&DMatrix::from_element(1, 1, z)).unwrap();
        assert_relative_eq!(e[(0, 0)].re, z.exp().re, epsilon = 1e-14);
        assert_relative_eq!(e[(0, 0)].im, z.exp().im, epsilon = 1e-14);
    }

    #[test]
    fn overflow_trips_guard() {
        assert!(matches!(
            expm(&dmatrix![800.0]),
            Err(Error::MagnitudeGuard { .. })
        ));
    }
}
