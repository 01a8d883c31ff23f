use nalgebra::{ComplexField, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A grid-indexed inner-product space `⟨f, g⟩ = Σ fᵢ ḡᵢ wᵢ h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSpace {
    grid_points: Vec<f64>,
    weights: Vec<f64>,
    cell_measure: f64,
}

impl WeightedSpace {
    pub fn new(grid_points: Vec<f64>, weights: Vec<f64>, cell_measure: f64) -> Result<Self> {
        if grid_points.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: grid_points.len(),
                actual: weights.len(),
            });
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::invalid(format!("weight {i} is {w}, must be positive and finite")));
        }
        if !(cell_measure.is_finite() && cell_measure > 0.0) {
            return Err(Error::invalid(format!("cell measure {cell_measure} must be positive")));
        }
        Ok(Self {
            grid_points,
            weights,
            cell_measure,
        })
    }

    /// Abstract index set `0..n` with the given weights and unit cell measure.
    pub fn with_weights(weights: Vec<f64>) -> Result<Self> {
        let grid = (0..weights.len()).map(|i| i as f64).collect();
        Self::new(grid, weights, 1.0)
    }

    /// Plain Euclidean space of dimension `n`.
    pub fn unweighted(n: usize) -> Self {
        Self::with_weights(vec![1.0; n]).expect("unit weights are valid")
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn grid_points(&self) -> &[f64] {
        &self.grid_points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cell_measure(&self) -> f64 {
        self.cell_measure
    }

    /// `sqrt(wᵢ h)`: multiplying a vector by this maps it isometrically to ℓ².
    pub fn frame_scale(&self) -> Vec<f64> {
        self.weights
            .iter()
            .map(|w| (w * self.cell_measure).sqrt())
            .collect()
    }

    pub fn norm<T: ComplexField<RealField = f64>>(&self, v: &DVector<T>) -> Result<f64> {
        self.check_dim(v.len())?;
        let sum: f64 = v
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| x.clone().modulus_squared() * w)
            .sum();
        Ok((sum * self.cell_measure).sqrt())
    }

    /// `Σ fᵢ conj(gᵢ) wᵢ h`.
    pub fn inner<T: ComplexField<RealField = f64>>(
        &self,
        f: &DVector<T>,
        g: &DVector<T>,
    ) -> Result<T> {
        self.check_dim(f.len())?;
        self.check_dim(g.len())?;
        let mut acc = T::zero();
        for ((a, b), w) in f.iter().zip(g.iter()).zip(&self.weights) {
            acc += a.clone() * b.clone().conjugate() * T::from_real(*w);
        }
        Ok(acc * T::from_real(self.cell_measure))
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: n,
            });
        }
        Ok(())
    }
}

/// `W_cod^{1/2} M W_dom^{-1/2}`: the matrix of `M : dom → cod` in orthonormal
/// coordinates of both spaces. Its unweighted singular values are the
/// weighted ones of `M`.
pub fn congruence<T: ComplexField<RealField = f64>>(
    m: &DMatrix<T>,
    dom: &WeightedSpace,
    cod: &WeightedSpace,
) -> Result<DMatrix<T>> {
    dom.check_dim(m.ncols())?;
    cod.check_dim(m.nrows())?;
    let left = cod.frame_scale();
    let right = dom.frame_scale();
    Ok(DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        m[(i, j)].clone() * T::from_real(left[i] / right[j])
    }))
}

/// Inverse of [`congruence`]: back from orthonormal coordinates.
pub fn uncongruence<T: ComplexField<RealField = f64>>(
    m: &DMatrix<T>,
    dom: &WeightedSpace,
    cod: &WeightedSpace,
) -> Result<DMatrix<T>> {
    dom.check_dim(m.ncols())?;
    cod.check_dim(m.nrows())?;
    let left = cod.frame_scale();
    let right = dom.frame_scale();
    Ok(DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        m[(i, j)].clone() * T::from_real(right[j] / left[i])
    }))
}
