use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::operator::{check_square, CMatrix, RMatrix, WeightedSpace};
use crate::{Error, Result};

/// Outcome of a numerical check. Results within tolerance of a decision
/// boundary are reported as indeterminate rather than forced either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    Indeterminate,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }

    /// Worst of two verdicts: fail beats indeterminate beats pass.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (Fail, _) | (_, Fail) => Fail,
            (Indeterminate, _) | (_, Indeterminate) => Indeterminate,
            _ => Pass,
        }
    }
}

/// The evidence behind a failed or indeterminate verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Witness {
    Eigenvalue { value: Complex64, reason: String },
    ImaginaryPart { y: f64, reason: String },
    SpectralPoint { xi: Complex64, reason: String },
    Time { t: f64, reason: String },
    Message { reason: String },
}

/// A small space `H` continuously embedded in an ambient space `ℋ` on the
/// same index set. The injection is the identity; only the norms differ.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSpacePair {
    ambient: WeightedSpace,
    small: WeightedSpace,
    embedding_constant: f64,
}

fn minimal_embedding_constant(ambient: &WeightedSpace, small: &WeightedSpace) -> f64 {
    let ha = ambient.cell_measure();
    let hs = small.cell_measure();
    ambient
        .weights()
        .iter()
        .zip(small.weights())
        .map(|(wa, ws)| (wa * ha / (ws * hs)).sqrt())
        .fold(0.0, f64::max)
}

impl EmbeddedSpacePair {
    /// Pair with the sharpest embedding constant `max_i sqrt(w_ℋ,i / w_H,i)`.
    pub fn new(ambient: WeightedSpace, small: WeightedSpace) -> Result<Self> {
        if ambient.dim() != small.dim() {
            return Err(Error::DimensionMismatch {
                expected: ambient.dim(),
                actual: small.dim(),
            });
        }
        let c = minimal_embedding_constant(&ambient, &small);
        Ok(Self {
            ambient,
            small,
            embedding_constant: c,
        })
    }

    /// Pair with a caller-supplied constant, which must dominate the sharp one.
    pub fn with_constant(ambient: WeightedSpace, small: WeightedSpace, c: f64) -> Result<Self> {
        let mut pair = Self::new(ambient, small)?;
        if !(c.is_finite() && c >= pair.embedding_constant) {
            return Err(Error::invalid(format!(
                "embedding constant {c} below the required {}",
                pair.embedding_constant
            )));
        }
        pair.embedding_constant = c;
        Ok(pair)
    }

    pub fn ambient(&self) -> &WeightedSpace {
        &self.ambient
    }

    pub fn small(&self) -> &WeightedSpace {
        &self.small
    }

    pub fn embedding_constant(&self) -> f64 {
        self.embedding_constant
    }

    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    /// Frame matrix of the injection `H → ℋ`: `diag(sqrt(w_ℋ h_ℋ / (w_H h_H)))`.
    pub fn injection_frame(&self) -> Vec<f64> {
        let a = self.ambient.frame_scale();
        let s = self.small.frame_scale();
        a.iter().zip(&s).map(|(x, y)| x / y).collect()
    }
}

/// A generator together with a decomposition `full = part_a + part_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitOperator {
    full: RMatrix,
    part_a: RMatrix,
    part_b: RMatrix,
}

impl SplitOperator {
    /// The full operator is formed as `part_a + part_b`, so the identity is
    /// exact in floating point.
    pub fn new(part_a: RMatrix, part_b: RMatrix) -> Result<Self> {
        let n = check_square(&part_a)?;
        if part_b.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: part_b.nrows(),
            });
        }
        if part_a.iter().chain(part_b.iter()).any(|x| !x.is_finite()) {
            return Err(Error::invalid("decomposition has non-finite entries"));
        }
        Ok(Self {
            full: &part_a + &part_b,
            part_a,
            part_b,
        })
    }

    /// `part_b = full − part_a`; `full` is then recomputed from the parts.
    pub fn from_full(full: &RMatrix, part_a: RMatrix) -> Result<Self> {
        let part_b = full - &part_a;
        Self::new(part_a, part_b)
    }

    pub fn full(&self) -> &RMatrix {
        &self.full
    }

    pub fn part_a(&self) -> &RMatrix {
        &self.part_a
    }

    pub fn part_b(&self) -> &RMatrix {
        &self.part_b
    }

    /// The same matrix, to be measured in the small space.
    pub fn restricted(&self) -> &RMatrix {
        &self.full
    }

    pub fn dim(&self) -> usize {
        self.full.nrows()
    }

    /// `𝒯 + σ·Id` with the shift put on `part_b`.
    pub fn shifted(&self, sigma: f64) -> Self {
        let n = self.dim();
        let b = &self.part_b + DMatrix::identity(n, n) * sigma;
        Self::new(self.part_a.clone(), b).expect("shift keeps shapes")
    }
}

/// Spectrum localization data: eigenvalues, the half-plane abscissa `a`,
/// the isolation radius `r`, the isolated eigenvalues `ξⱼ` with their Riesz
/// projectors, and optionally a resolvent bound `K`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    pub eigenvalues: Vec<Complex64>,
    pub abscissa: f64,
    pub radius: f64,
    pub discrete: Vec<Complex64>,
    pub multiplicities: Vec<usize>,
    #[serde(skip)]
    pub projectors: Vec<CMatrix>,
    pub resolvent_bound: Option<f64>,
}

impl SpectralReport {
    /// Report with given isolated eigenvalues and projectors, no spectrum.
    pub fn from_parts(abscissa: f64, radius: f64, discrete: Vec<Complex64>, projectors: Vec<CMatrix>) -> Self {
        Self {
            eigenvalues: Vec::new(),
            abscissa,
            radius,
            multiplicities: vec![1; discrete.len()],
            discrete,
            projectors,
            resolvent_bound: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn embedding_constant_is_sharp() {
        let amb = WeightedSpace::with_weights(vec![1.0, 2.0]).unwrap();
        let small = WeightedSpace::with_weights(vec![4.0, 2.0]).unwrap();
        let pair = EmbeddedSpacePair::new(amb.clone(), small.clone()).unwrap();
        assert_eq!(pair.embedding_constant(), 1.0);
        assert!(EmbeddedSpacePair::with_constant(amb.clone(), small.clone(), 0.9).is_err());
        assert_eq!(
            EmbeddedSpacePair::with_constant(amb, small, 3.0)
                .unwrap()
                .embedding_constant(),
            3.0
        );
    }

    #[test]
    fn split_sum_is_exact() {
        let t = dmatrix![0.1, 0.2; 0.3, 0.7];
        let a = dmatrix![1.0 / 3.0, 0.0; 0.0, 0.0];
        let s = SplitOperator::from_full(&t, a).unwrap();
        assert_eq!(s.full(), &(s.part_a() + s.part_b()));
    }

    #[test]
    fn verdict_combination() {
        use Verdict::*;
        assert_eq!(Pass.and(Pass), Pass);
        assert_eq!(Pass.and(Indeterminate), Indeterminate);
        assert_eq!(Indeterminate.and(Fail), Fail);
    }
}
