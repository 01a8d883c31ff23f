//! Search for a splitting `𝒯 = 𝒜 + ℬ` with `𝒜 = M·χ_{|x| ≤ R}` and `ℬ`
//! dissipative below a target abscissa in the enlarged space.

use serde::{Deserialize, Serialize};

use super::discretization::FPDiscretization;
use super::sparse::SparseOperator;
use super::spectrum::{kth_largest, DENSE_LIMIT};
use crate::enlargement::SplitOperator;
use crate::operator::{RMatrix, WeightedSpace};
use crate::par::{self, Execution};
use crate::{Error, Result};

/// Box of `(M, R)` values: `M` geometric, `R` linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchBox {
    pub m_min: f64,
    pub m_max: f64,
    pub m_count: usize,
    pub r_min: f64,
    /// Upper end of the radius range; `None` means `L/2`.
    pub r_max: Option<f64>,
    pub r_count: usize,
}

impl Default for SearchBox {
    fn default() -> Self {
        Self {
            m_min: 1.0,
            m_max: 100.0,
            m_count: 13,
            r_min: 1.0,
            r_max: None,
            r_count: 8,
        }
    }
}

impl SearchBox {
    pub fn m_values(&self) -> Vec<f64> {
        if self.m_count <= 1 {
            return vec![self.m_min];
        }
        let step = (self.m_max / self.m_min).ln() / (self.m_count - 1) as f64;
        (0..self.m_count).map(|i| self.m_min * (step * i as f64).exp()).collect()
    }

    pub fn r_values(&self, l: f64) -> Vec<f64> {
        let hi = self.r_max.unwrap_or(0.5 * l);
        if self.r_count <= 1 {
            return vec![self.r_min];
        }
        let step = (hi - self.r_min) / (self.r_count - 1) as f64;
        (0..self.r_count).map(|i| self.r_min + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub m: f64,
    pub r: f64,
    /// Top eigenvalue of the ℋ-symmetric part of `ℬ`.
    pub top: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionSearch {
    pub target: f64,
    pub accepted: Option<Candidate>,
    pub candidates: Vec<Candidate>,
    /// Best `top` for each `M` over the radii searched.
    pub frontier: Vec<Candidate>,
}

impl DecompositionSearch {
    pub fn require(&self) -> Result<Candidate> {
        self.accepted.ok_or_else(|| {
            let best = self
                .frontier
                .iter()
                .min_by(|a, b| a.top.total_cmp(&b.top))
                .map(|c| format!(" (best {:.4} at M = {:.3}, R = {:.3})", c.top, c.m, c.r))
                .unwrap_or_default();
            Error::Infeasible(format!(
                "no (M, R) in the search box brings the dissipativity bound below {}{best}",
                self.target
            ))
        })
    }
}

/// Diagonal of `𝒜 = M·χ_{|x| ≤ R}`.
pub fn cutoff_diagonal(disc: &FPDiscretization, m: f64, r: f64) -> Vec<f64> {
    (0..disc.dim())
        .map(|p| {
            let x = disc.grid.point(p);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm <= r {
                m
            } else {
                0.0
            }
        })
        .collect()
}

/// `ℬ = 𝒯 − M·χ_{|x| ≤ R}`.
pub fn dissipative_part(disc: &FPDiscretization, m: f64, r: f64) -> SparseOperator {
    let d: Vec<f64> = cutoff_diagonal(disc, m, r).into_iter().map(|v| -v).collect();
    disc.generator.add_diagonal(&d)
}

/// Largest eigenvalue of `(B̃ + B̃ᵀ)/2`, `B̃` the operator in orthonormal
/// coordinates of `space`.
pub fn top_dissipation(op: &SparseOperator, space: &WeightedSpace) -> Result<f64> {
    let scale = space.frame_scale();
    let inv: Vec<f64> = scale.iter().map(|s| 1.0 / s).collect();
    let frame = op.scaled(&scale, &inv);
    let n = op.dim();
    let (kl, ku) = frame.bandwidths();
    if kl.max(ku) <= 1 {
        let diag: Vec<f64> = (0..n).map(|i| frame.get(i, i)).collect();
        let off: Vec<f64> = (0..n - 1)
            .map(|i| 0.5 * (frame.get(i, i + 1) + frame.get(i + 1, i)))
            .collect();
        return Ok(kth_largest(&diag, &off, 1));
    }
    if n > DENSE_LIMIT {
        return Err(Error::invalid(format!(
            "dense eigensolve limited to {DENSE_LIMIT} unknowns, got {n}"
        )));
    }
    let m = frame.to_dense();
    let sym = (&m + m.transpose()) * 0.5;
    Ok(sym.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Evaluate every `(M, R)` in the box and accept the first, in `M`-major
/// order, whose dissipativity bound is `≤ target`.
pub fn find_decomposition(
    disc: &FPDiscretization,
    ambient: &WeightedSpace,
    target: f64,
    search: &SearchBox,
    exec: Execution,
) -> Result<DecompositionSearch> {
    if !(target < 0.0) {
        return Err(Error::invalid(format!("target abscissa {target} must be negative")));
    }
    if ambient.dim() != disc.dim() {
        return Err(Error::DimensionMismatch {
            expected: disc.dim(),
            actual: ambient.dim(),
        });
    }
    let pairs: Vec<(f64, f64)> = search
        .m_values()
        .into_iter()
        .flat_map(|m| search.r_values(disc.grid.l).into_iter().map(move |r| (m, r)))
        .collect();
    let candidates = par::try_map(exec, &pairs, |&(m, r)| {
        let top = top_dissipation(&dissipative_part(disc, m, r), ambient)?;
        Ok::<_, Error>(Candidate { m, r, top })
    })?;
    let accepted = candidates.iter().copied().find(|c| c.top <= target);
    let mut frontier: Vec<Candidate> = Vec::new();
    for c in &candidates {
        match frontier.last_mut() {
            Some(last) if last.m == c.m => {
                if c.top < last.top {
                    *last = *c;
                }
            }
            _ => frontier.push(*c),
        }
    }
    Ok(DecompositionSearch {
        target,
        accepted,
        candidates,
        frontier,
    })
}

/// Dense `(𝒜, ℬ)` for revalidation with the enlargement checks.
pub fn dense_split(disc: &FPDiscretization, m: f64, r: f64) -> Result<SplitOperator> {
    let a = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(cutoff_diagonal(disc, m, r)));
    SplitOperator::from_full(&disc.generator.to_dense(), a)
}
