//! The enlarged resolvent `U(ξ) = ℬ(ξ)⁻¹ − R(ξ)𝒜ℬ(ξ)⁻¹` and what follows
//! from it: factorization residuals, injectivity diagnostics, the
//! triangle-inequality bound chain and eigenvalue coincidence.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hypotheses::{invert_checked, H4Report, SplitFrames};
use super::types::{EmbeddedSpacePair, SplitOperator, Verdict};
use crate::operator::eigen::eigen_decompose;
use crate::operator::norm::{sigma_max, sigma_min, smallest_singular_triplet};
use crate::operator::space::uncongruence;
use crate::operator::{shifted, CMatrix};
use crate::par::{self, Execution};
use crate::{Error, Result, Tolerances};

/// `U(ξ)` in ℋ-orthonormal coordinates. Assembled from the three factors,
/// each in its own frame, with the injection `H → ℋ` as a bounded diagonal:
/// `Ũ = ℬ̃(ξ)⁻¹ − J̃ · R̃_H(ξ) · (𝒜̃_{ℋ→H} ℬ̃(ξ)⁻¹)`.
pub(crate) fn enlarged_resolvent_frame(
    frames: &SplitFrames,
    injection: &[f64],
    xi: Complex64,
) -> Result<CMatrix> {
    let binv = frames.b_inverse_amb(xi)?;
    let r = frames.r_small(xi)?;
    let ab = frames.a_mixed_c() * &binv;
    let mut correction = r * ab;
    for (i, mut row) in correction.row_iter_mut().enumerate() {
        row *= Complex64::new(injection[i], 0.0);
    }
    Ok(binv - correction)
}

/// `U(ξ)` in plain coordinates. Fails with [`Error::Singular`] if `ℬ − ξ` or
/// `T − ξ` is numerically singular.
pub fn enlarged_resolvent(
    split: &SplitOperator,
    pair: &EmbeddedSpacePair,
    xi: Complex64,
    tol: &Tolerances,
) -> Result<CMatrix> {
    let frames = SplitFrames::new(split, pair, tol)?;
    let u = enlarged_resolvent_frame(&frames, &pair.injection_frame(), xi)?;
    uncongruence(&u, pair.ambient(), pair.ambient())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorizationSample {
    pub xi: Complex64,
    /// `‖(𝒯−ξ)U(ξ) − Id‖_{ℒ(ℋ)}`
    pub residual: f64,
    /// `‖U(ξ) − (𝒯−ξ)⁻¹‖_{ℒ(ℋ)} / ‖(𝒯−ξ)⁻¹‖_{ℒ(ℋ)}`
    pub oracle_gap: f64,
    /// Condition number of `𝒯 − ξ` in ℋ.
    pub cond: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorizationReport {
    pub samples: Vec<FactorizationSample>,
    pub max_residual: f64,
    pub max_scaled_residual: f64,
    pub max_oracle_gap: f64,
}

/// Residual of the factorization against the identity and against the
/// direct dense inverse, at each ξ.
pub fn verify_factorization(
    split: &SplitOperator,
    pair: &EmbeddedSpacePair,
    xis: &[Complex64],
    tol: &Tolerances,
    exec: Execution,
) -> Result<FactorizationReport> {
    let frames = SplitFrames::new(split, pair, tol)?;
    let inj = pair.injection_frame();
    let n = split.dim();
    let samples = par::try_map(exec, xis, |&xi| {
        let u = enlarged_resolvent_frame(&frames, &inj, xi)?;
        let shifted_t = shifted(&frames.t_amb, xi);
        let residual = sigma_max(&(&shifted_t * &u - DMatrix::identity(n, n)))?;
        let direct = invert_checked(&shifted_t, xi, frames.floor_amb)?;
        let direct_norm = sigma_max(&direct)?;
        let oracle_gap = sigma_max(&(&u - &direct))? / direct_norm;
        let cond = sigma_max(&shifted_t)? * direct_norm;
        Ok::<_, Error>(FactorizationSample {
            xi,
            residual,
            oracle_gap,
            cond,
        })
    })?;
    let max = |f: fn(&FactorizationSample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    Ok(FactorizationReport {
        max_residual: max(|s| s.residual),
        max_scaled_residual: max(|s| s.residual / s.cond),
        max_oracle_gap: max(|s| s.oracle_gap),
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectivityDiagnosis {
    /// `ℬ − ξ` itself is singular: the decomposition hypothesis fails at ξ.
    DecompositionSingular,
    /// The near-null vector `g = −ℬ(ξ)⁻¹𝒜g` lies in the small space and is
    /// an eigenvector of the restriction: ξ is in the spectrum of `T`, so
    /// it should have been excluded by the localization hypothesis.
    EigenvalueOfRestriction,
    /// Neither path explains the small singular value.
    Unexplained,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InjectivityReport {
    pub verdict: Verdict,
    pub xi: Complex64,
    /// Smallest ℋ-singular value of `𝒯 − ξ`.
    pub sigma_min: f64,
    pub floor: f64,
    /// Near-null vector in plain coordinates, unit ℋ-norm (on failure).
    pub null_vector: Option<Vec<Complex64>>,
    pub diagnosis: Option<InjectivityDiagnosis>,
    /// `‖g‖_H` and `‖(T − ξ)g‖_H` for the near-null vector.
    pub small_norm: Option<f64>,
    pub small_residual: Option<f64>,
}

/// Is `𝒯 − ξ` one-to-one on ℋ? On failure, follow the contradiction path
/// `ℬ(ξ)g = −𝒜g` to say which hypothesis broke.
pub fn injectivity_check(
    split: &SplitOperator,
    pair: &EmbeddedSpacePair,
    xi: Complex64,
    tol: &Tolerances,
) -> Result<InjectivityReport> {
    let frames = SplitFrames::new(split, pair, tol)?;
    let shifted_t = shifted(&frames.t_amb, xi);
    let (s, v) = smallest_singular_triplet(&shifted_t)?;
    let floor = frames.floor_amb;
    let mut rep = InjectivityReport {
        verdict: Verdict::Pass,
        xi,
        sigma_min: s,
        floor,
        null_vector: None,
        diagnosis: None,
        small_norm: None,
        small_residual: None,
    };
    if s > floor {
        return Ok(rep);
    }
    rep.verdict = Verdict::Fail;
    let amb_scale = pair.ambient().frame_scale();
    // plain coordinates, with the largest entry made real and positive
    let mut g: DVector<Complex64> = DVector::from_fn(v.len(), |i, _| v[i] / amb_scale[i]);
    if let Some(k) = (0..g.len()).max_by(|&i, &j| g[i].norm().total_cmp(&g[j].norm())) {
        let phase = g[k].conj() / g[k].norm();
        g *= phase;
    }
    rep.null_vector = Some(g.iter().copied().collect());

    if sigma_min(&shifted(&frames.b_amb, xi))? <= floor {
        rep.diagnosis = Some(InjectivityDiagnosis::DecompositionSingular);
        return Ok(rep);
    }
    let small_scale = pair.small().frame_scale();
    let g_small = DVector::from_fn(g.len(), |i, _| g[i] * small_scale[i]);
    let small_norm = g_small.norm();
    let small_residual = (shifted(&frames.t_small, xi) * &g_small).norm();
    rep.small_norm = Some(small_norm);
    rep.small_residual = Some(small_residual);
    rep.diagnosis = Some(if small_norm.is_finite() && small_residual <= frames.floor_small * small_norm.max(1.0) {
        InjectivityDiagnosis::EigenvalueOfRestriction
    } else {
        InjectivityDiagnosis::Unexplained
    });
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSample {
    pub xi: Complex64,
    /// `‖ℬ(ξ)⁻¹‖_ℋ + c_J‖R(ξ)‖_H‖𝒜ℬ(ξ)⁻¹‖_{ℋ→H}`
    pub chain: f64,
    /// `‖(𝒯 − ξ)⁻¹‖_ℋ` computed directly.
    pub direct: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundChain {
    /// Certified `K_ℋ`: supremum of the chain over the samples.
    pub k_ambient: f64,
    /// Supremum of the direct norms.
    pub direct_sup: f64,
    pub samples: Vec<ChainSample>,
    /// Samples where the chain fell below the direct value.
    pub violations: usize,
}

/// Per-ξ triangle-inequality envelope of `‖U(ξ)‖_{ℒ(ℋ)}`, reusing the
/// `ℬ(ξ)⁻¹` and `𝒜ℬ(ξ)⁻¹` norms of an H4 report.
pub fn enlargement_bound_chain(
    split: &SplitOperator,
    pair: &EmbeddedSpacePair,
    h4: &H4Report,
    tol: &Tolerances,
    exec: Execution,
) -> Result<BoundChain> {
    let frames = SplitFrames::new(split, pair, tol)?;
    let c_j = pair.embedding_constant();
    let samples = par::try_map(exec, &h4.samples, |s| {
        let r_norm = if s.a_b_inverse == 0.0 {
            0.0
        } else {
            sigma_max(&frames.r_small(s.xi)?)?
        };
        let chain = s.b_inverse + c_j * r_norm * s.a_b_inverse;
        let direct = 1.0 / sigma_min(&shifted(&frames.t_amb, s.xi))?;
        Ok::<_, Error>(ChainSample {
            xi: s.xi,
            chain,
            direct,
        })
    })?;
    // rounding slack of a few ulps per factor
    let slack = 1e-12;
    Ok(BoundChain {
        k_ambient: samples.iter().map(|s| s.chain).fold(0.0, f64::max),
        direct_sup: samples.iter().map(|s| s.direct).fold(0.0, f64::max),
        violations: samples
            .iter()
            .filter(|s| s.chain < s.direct * (1.0 - slack))
            .count(),
        samples,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoincidenceReport {
    pub verdict: Verdict,
    pub ambient: Vec<Complex64>,
    pub small: Vec<Complex64>,
    pub max_distance: f64,
}

/// Compare the eigenvalues in `Re z > a` computed in both frames.
pub fn eigen_coincidence(
    split: &SplitOperator,
    pair: &EmbeddedSpacePair,
    a: f64,
    tol: &Tolerances,
) -> Result<CoincidenceReport> {
    let frames = SplitFrames::new(split, pair, tol)?;
    let pick = |m: &crate::operator::RMatrix| -> Result<(Vec<Complex64>, f64)> {
        let e = eigen_decompose(m, tol.eig)?;
        let scale = sigma_max(m)?.max(1.0);
        Ok((e.values.into_iter().filter(|z| z.re > a).collect(), scale))
    };
    let (amb, s1) = pick(&frames.t_amb)?;
    let (small, s2) = pick(&frames.t_small)?;
    let allowed = tol.eig * s1.max(s2);
    let mut max_distance = 0.0f64;
    let mut verdict = if amb.len() == small.len() { Verdict::Pass } else { Verdict::Fail };
    if verdict.passed() {
        for z in &amb {
            let d = small.iter().map(|w| (z - w).norm()).fold(f64::INFINITY, f64::min);
            max_distance = max_distance.max(d);
        }
        if max_distance > allowed {
            verdict = Verdict::Fail;
        }
    } else {
        max_distance = f64::INFINITY;
    }
    Ok(CoincidenceReport {
        verdict,
        ambient: amb,
        small,
        max_distance,
    })
}
