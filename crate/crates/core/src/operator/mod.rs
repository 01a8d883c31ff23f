//! Weighted dense linear algebra: the substrate for every other module.
//!
//! Generators are real matrices (`DMatrix<f64>`). Objects evaluated off the
//! real axis (resolvents, projectors, enlarged resolvents) are complex.
//! Every weighted norm goes through one kernel: the diagonal congruence
//! `W_cod^{1/2} M W_dom^{-1/2}` followed by an unweighted singular value
//! computation.

pub mod banded;
pub mod decay;
pub mod eigen;
pub mod expm;
pub mod norm;
pub mod projector;
pub mod resolvent;
pub mod semigroup;
pub mod space;
pub mod tridiagonal;

use nalgebra::DMatrix;
use num_complex::Complex64;

pub use decay::{certify_rate, fit_exponential_decay, DecayFit, FitOptions};
pub use eigen::{eigen_decompose, EigenDecomposition};
pub use expm::expm;
pub use norm::{
    operator_norm, resolvent_norm, sigma_max, sigma_min, smallest_singular_triplet,
    spectral_norm_power,
};
pub use projector::{spectral_projector, ProjectorResult};
pub use resolvent::resolvent;
pub use semigroup::{semigroup_apply, Generator, Scheme, ShiftedSolve, Trajectory};
pub use space::{congruence, uncongruence, WeightedSpace};

pub type RMatrix = DMatrix<f64>;
pub type CMatrix = DMatrix<Complex64>;

/// Promote a real matrix to complex.
pub fn complexify(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// `M − z·Id` for a real generator and complex shift.
pub fn shifted(m: &RMatrix, z: Complex64) -> CMatrix {
    let mut out = complexify(m);
    for i in 0..out.nrows() {
        out[(i, i)] -= z;
    }
    out
}

pub(crate) fn check_square<T: nalgebra::Scalar>(m: &DMatrix<T>) -> crate::Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(crate::Error::invalid(format!(
            "operator must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}
