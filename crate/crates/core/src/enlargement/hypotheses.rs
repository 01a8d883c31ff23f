//! Checks of the localization, resolvent, semigroup and decomposition
//! hypotheses.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::sampling::YGrid;
use super::types::{EmbeddedSpacePair, SpectralReport, SplitOperator, Verdict, Witness};
use crate::operator::decay::{fit_exponential_decay, DecayFit, FitOptions};
use crate::operator::eigen::eigen_decompose;
use crate::operator::norm::{sigma_max, sigma_min};
use crate::operator::projector::spectral_projector_with;
use crate::operator::{congruence, expm, shifted, CMatrix, RMatrix, WeightedSpace};
use crate::par::{self, Execution};
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct H1Report {
    pub verdict: Verdict,
    pub spectral: SpectralReport,
    pub witness: Option<Witness>,
}

/// Localize the spectrum: every eigenvalue must have `Re ≤ a` or sit in one
/// of finitely many disjoint balls `B(ξⱼ, r)` with `Re ξⱼ − r > a`.
/// Eigenvalues within `tol.eig·max(‖T‖, 1)` of a decision boundary make the
/// verdict indeterminate. With `expected_k`, the number of balls must match.
pub fn check_h1(
    t: &RMatrix,
    a: f64,
    r: f64,
    expected_k: Option<usize>,
    tol: &Tolerances,
) -> Result<H1Report> {
    if !(r.is_finite() && r > 0.0) || !a.is_finite() {
        return Err(Error::invalid(format!("need finite a and r > 0, got a={a}, r={r}")));
    }
    let eig = eigen_decompose(t, tol.eig)?;
    let band = tol.eig * sigma_max(t)?.max(1.0);
    let values = eig.values.clone();

    let mut witness = None;
    let mut verdict = Verdict::Pass;
    let mut flag = |v: Verdict, w: Witness, verdict: &mut Verdict| {
        if v == Verdict::Fail && *verdict != Verdict::Fail || witness.is_none() {
            witness = Some(w);
        }
        *verdict = verdict.and(v);
    };

    let mut inside: Vec<usize> = Vec::new();
    for (j, &lam) in values.iter().enumerate() {
        if (lam.re - a).abs() <= band {
            flag(
                Verdict::Indeterminate,
                Witness::Eigenvalue {
                    value: lam,
                    reason: "eigenvalue on the boundary Re z = a".into(),
                },
                &mut verdict,
            );
        } else if lam.re > a {
            inside.push(j);
        }
    }

    // single-linkage clusters at scale r
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &j in &inside {
        let hits: Vec<usize> = clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.iter().any(|&i| (values[i] - values[j]).norm() < r))
            .map(|(k, _)| k)
            .collect();
        let mut merged = vec![j];
        for &k in hits.iter().rev() {
            merged.extend(clusters.remove(k));
        }
        clusters.push(merged);
    }
    let mut centers: Vec<(Complex64, Vec<usize>)> = clusters
        .into_iter()
        .map(|c| {
            let sum: Complex64 = c.iter().map(|&i| values[i]).sum();
            (sum / c.len() as f64, c)
        })
        .collect();
    centers.sort_by(|x, y| y.0.re.total_cmp(&x.0.re).then(y.0.im.total_cmp(&x.0.im)));

    for (c, members) in &centers {
        for (j, &lam) in values.iter().enumerate() {
            let d = (lam - c).norm();
            let member = members.contains(&j);
            if member && d >= r - band {
                let v = if d >= r + band { Verdict::Fail } else { Verdict::Indeterminate };
                flag(
                    v,
                    Witness::Eigenvalue {
                        value: lam,
                        reason: format!("cluster around {c} wider than r"),
                    },
                    &mut verdict,
                );
            } else if !member && d <= r + band {
                let v = if d <= r - band { Verdict::Fail } else { Verdict::Indeterminate };
                flag(
                    v,
                    Witness::Eigenvalue {
                        value: lam,
                        reason: format!("eigenvalue enters the ball around {c}"),
                    },
                    &mut verdict,
                );
            }
        }
        let margin = c.re - r - a;
        if margin <= band {
            let v = if margin < -band { Verdict::Fail } else { Verdict::Indeterminate };
            flag(
                v,
                Witness::Eigenvalue {
                    value: *c,
                    reason: "ball not strictly inside Re z > a".into(),
                },
                &mut verdict,
            );
        }
    }
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            if (centers[i].0 - centers[j].0).norm() <= 2.0 * r {
                flag(
                    Verdict::Fail,
                    Witness::Eigenvalue {
                        value: centers[j].0,
                        reason: format!("ball overlaps the one around {}", centers[i].0),
                    },
                    &mut verdict,
                );
            }
        }
    }
    if let Some(k) = expected_k {
        if centers.len() != k {
            let extra = centers.get(k).map(|c| c.0).unwrap_or(Complex64::new(a, 0.0));
            flag(
                Verdict::Fail,
                Witness::Eigenvalue {
                    value: extra,
                    reason: format!("found {} isolated eigenvalue groups, expected {k}", centers.len()),
                },
                &mut verdict,
            );
        }
    }

    let mut projectors = Vec::new();
    if verdict == Verdict::Pass {
        for (c, _) in &centers {
            projectors.push(spectral_projector_with(t, &eig, *c, r, tol)?.projector);
        }
    }
    Ok(H1Report {
        verdict,
        witness,
        spectral: SpectralReport {
            eigenvalues: values,
            abscissa: a,
            radius: r,
            multiplicities: centers.iter().map(|c| c.1.len()).collect(),
            discrete: centers.into_iter().map(|c| c.0).collect(),
            projectors,
            resolvent_bound: None,
        },
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct H2Report {
    pub verdict: Verdict,
    /// Largest resolvent norm over the grid.
    pub k_grid: f64,
    pub argmax_y: f64,
    /// Certified bound for `|y| > y_max`: `1/(y_max − ‖Ť − a‖)`.
    pub tail_bound: f64,
    pub y_max: f64,
    /// `max(k_grid, tail_bound)`.
    pub k: f64,
    pub samples: Vec<(f64, f64)>,
    pub witness: Option<Witness>,
}

/// Scan `‖(T − (a + iy))⁻¹‖_{ℒ(E)}` over `y_grid`. Errors with
/// [`Error::Singular`] when a grid point is numerically on the spectrum.
pub fn check_h2(
    t: &RMatrix,
    a: f64,
    space: &WeightedSpace,
    y_grid: &YGrid,
    tol: &Tolerances,
    exec: Execution,
) -> Result<H2Report> {
    let frame = congruence(t, space, space)?;
    let n = frame.nrows();
    let shifted_norm = sigma_max(&(&frame - DMatrix::identity(n, n) * a))?;
    scan_line(&frame, a, shifted_norm, y_grid, tol, exec)
}

/// As [`check_h2`] but for a matrix already in orthonormal coordinates.
pub(crate) fn scan_line(
    frame: &RMatrix,
    a: f64,
    shifted_norm: f64,
    y_grid: &YGrid,
    tol: &Tolerances,
    exec: Execution,
) -> Result<H2Report> {
    if !y_grid.is_symmetric() {
        return Err(Error::invalid("y-grid must be symmetric about 0 and contain 0"));
    }
    let floor = tol.solve * sigma_max(frame)?.max(1.0);
    let norms = par::try_map(exec, &y_grid.points, |&y| {
        let z = Complex64::new(a, y);
        let s = sigma_min(&shifted(frame, z))?;
        if s <= floor {
            return Err(Error::Singular { point: z, distance: s });
        }
        Ok(1.0 / s)
    })?;
    let (idx, &k_grid) = norms
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty grid");
    let tail_bound = if y_grid.y_max > shifted_norm {
        1.0 / (y_grid.y_max - shifted_norm)
    } else {
        f64::INFINITY
    };
    let k = k_grid.max(tail_bound);
    let (verdict, witness) = if k.is_finite() {
        (Verdict::Pass, None)
    } else {
        (
            Verdict::Fail,
            Some(Witness::ImaginaryPart {
                y: y_grid.y_max,
                reason: "grid too short for the Neumann tail bound".into(),
            }),
        )
    };
    Ok(H2Report {
        verdict,
        k_grid,
        argmax_y: y_grid.points[idx],
        tail_bound,
        y_max: y_grid.y_max,
        k,
        samples: y_grid.points.iter().copied().zip(norms).collect(),
        witness,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct H3Report {
    pub verdict: Verdict,
    pub fit: DecayFit,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
}

/// Envelope `‖e^{tT}‖_{ℒ(E)} ≤ C_b e^{bt}` fitted on `t_grid`.
pub fn check_h3(t: &RMatrix, space: &WeightedSpace, t_grid: &[f64], exec: Execution) -> Result<H3Report> {
    let frame = congruence(t, space, space)?;
    let norms = par::try_map(exec, t_grid, |&time| sigma_max(&expm(&(&frame * time))?))?;
    let fit = fit_exponential_decay(t_grid, &norms, FitOptions::default())?;
    Ok(H3Report {
        verdict: Verdict::Pass,
        fit,
        times: t_grid.to_vec(),
        norms,
    })
}

/// Uniform grid `0, Δ, …, t_max` with `count` points.
pub fn uniform_times(t_max: f64, count: usize) -> Vec<f64> {
    let count = count.max(2);
    (0..count)
        .map(|k| t_max * k as f64 / (count - 1) as f64)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H4Sample {
    pub xi: Complex64,
    /// `‖ℬ(ξ)⁻¹‖_{ℒ(ℋ)}`
    pub b_inverse: f64,
    /// `‖𝒜ℬ(ξ)⁻¹‖_{ℒ(ℋ→H)}`
    pub a_b_inverse: f64,
    /// `‖ℬ(ξ)⁻¹𝒜‖_{ℒ(ℋ→H)}`
    pub b_inverse_a: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct H4Report {
    pub verdict: Verdict,
    pub samples: Vec<H4Sample>,
    pub sup_b_inverse: f64,
    pub sup_a_b_inverse: f64,
    pub sup_b_inverse_a: f64,
    pub witness: Option<Witness>,
}

/// Frames of the decomposition used by the per-ξ computations.
pub(crate) struct SplitFrames {
    /// `ℬ` in ℋ-orthonormal coordinates.
    pub b_amb: RMatrix,
    /// `ℬ` in H-orthonormal coordinates.
    pub b_small: RMatrix,
    /// `𝒜 : ℋ → H`.
    pub a_mixed: RMatrix,
    /// `𝒯` in ℋ-orthonormal coordinates.
    pub t_amb: RMatrix,
    /// `T` in H-orthonormal coordinates.
    pub t_small: RMatrix,
    pub floor_amb: f64,
    pub floor_small: f64,
}

impl SplitFrames {
    pub fn new(split: &SplitOperator, pair: &EmbeddedSpacePair, tol: &Tolerances) -> Result<Self> {
        let (amb, small) = (pair.ambient(), pair.small());
        let b_amb = congruence(split.part_b(), amb, amb)?;
        let t_amb = congruence(split.full(), amb, amb)?;
        let t_small = congruence(split.full(), small, small)?;
        let floor_amb = tol.solve * sigma_max(&t_amb)?.max(sigma_max(&b_amb)?).max(1.0);
        let floor_small = tol.solve * sigma_max(&t_small)?.max(1.0);
        Ok(Self {
            b_small: congruence(split.part_b(), small, small)?,
            a_mixed: congruence(split.part_a(), amb, small)?,
            b_amb,
            t_amb,
            t_small,
            floor_amb,
            floor_small,
        })
    }

    /// `(ℬ̃ − ξ)⁻¹` in ℋ-coordinates, or the σ_min witness if singular.
    pub fn b_inverse_amb(&self, xi: Complex64) -> Result<CMatrix> {
        invert_checked(&shifted(&self.b_amb, xi), xi, self.floor_amb)
    }

    pub fn b_inverse_small(&self, xi: Complex64) -> Result<CMatrix> {
        invert_checked(&shifted(&self.b_small, xi), xi, self.floor_small)
    }

    /// `(Ť − ξ)⁻¹` in H-coordinates.
    pub fn r_small(&self, xi: Complex64) -> Result<CMatrix> {
        invert_checked(&shifted(&self.t_small, xi), xi, self.floor_small)
    }

    pub fn a_mixed_c(&self) -> CMatrix {
        self.a_mixed.map(|x| Complex64::new(x, 0.0))
    }

    pub fn sample(&self, xi: Complex64) -> Result<H4Sample> {
        let shifted_b = shifted(&self.b_amb, xi);
        let s_min = sigma_min(&shifted_b)?;
        let binv = invert_checked(&shifted_b, xi, self.floor_amb)?;
        let binv_small = self.b_inverse_small(xi)?;
        let a = self.a_mixed_c();
        Ok(H4Sample {
            xi,
            b_inverse: 1.0 / s_min,
            a_b_inverse: sigma_max(&(&a * &binv))?,
            b_inverse_a: sigma_max(&(&binv_small * &a))?,
        })
    }
}

pub(crate) fn invert_checked(m: &CMatrix, xi: Complex64, floor: f64) -> Result<CMatrix> {
    let s = sigma_min(m)?;
    if s <= floor {
        return Err(Error::Singular { point: xi, distance: s });
    }
    m.clone()
        .lu()
        .try_inverse()
        .ok_or(Error::Singular { point: xi, distance: s })
}

/// Evaluate the three decomposition norms at every sample; pass iff all are
/// finite and below `tol.h4_ceiling`.
pub fn check_h4(
    split: &SplitOperator,
    pair: &EmbeddedSpacePair,
    xis: &[Complex64],
    tol: &Tolerances,
    exec: Execution,
) -> Result<H4Report> {
    if split.dim() != pair.dim() {
        return Err(Error::DimensionMismatch {
            expected: pair.dim(),
            actual: split.dim(),
        });
    }
    if xis.is_empty() {
        return Err(Error::invalid("no ξ samples"));
    }
    let frames = SplitFrames::new(split, pair, tol)?;
    let results = par::map(exec, xis, |&xi| frames.sample(xi));

    let mut samples = Vec::with_capacity(xis.len());
    let mut verdict = Verdict::Pass;
    let mut witness = None;
    for res in results {
        match res {
            Ok(s) => {
                let worst = s.b_inverse.max(s.a_b_inverse).max(s.b_inverse_a);
                if !(worst.is_finite() && worst <= tol.h4_ceiling) && verdict == Verdict::Pass {
                    verdict = Verdict::Fail;
                    witness = Some(Witness::SpectralPoint {
                        xi: s.xi,
                        reason: format!("decomposition norm {worst:e} above ceiling"),
                    });
                }
                samples.push(s);
            }
            Err(Error::Singular { point, distance }) => {
                if verdict == Verdict::Pass {
                    verdict = Verdict::Fail;
                    witness = Some(Witness::SpectralPoint {
                        xi: point,
                        reason: format!("B - xi numerically singular (sigma_min {distance:e})"),
                    });
                }
            }
            Err(e) => return Err(e),
        }
    }
    let sup = |f: fn(&H4Sample) -> f64| samples.iter().map(f).fold(0.0, f64::max);
    Ok(H4Report {
        verdict,
        sup_b_inverse: sup(|s| s.b_inverse),
        sup_a_b_inverse: sup(|s| s.a_b_inverse),
        sup_b_inverse_a: sup(|s| s.b_inverse_a),
        samples,
        witness,
    })
}

/// Schema-versioned bundle of the four hypothesis checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub schema_version: u32,
    pub h1: H1Report,
    pub h2: Option<H2Report>,
    pub h3: Option<H3Report>,
    pub h4: Option<H4Report>,
}

impl HypothesisReport {
    pub const SCHEMA_VERSION: u32 = 1;

    pub fn verdict(&self) -> Verdict {
        let mut v = self.h1.verdict;
        for other in [
            self.h2.as_ref().map(|h| h.verdict),
            self.h3.as_ref().map(|h| h.verdict),
            self.h4.as_ref().map(|h| h.verdict),
        ]
        .into_iter()
        .flatten()
        {
            v = v.and(other);
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn h1_diagonal_passes_with_one_ball() {
        let t = dmatrix![0.0, 0.0; 0.0, -1.0];
        let rep = check_h1(&t, -0.5, 0.25, Some(1), &Tolerances::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.spectral.discrete, vec![c(0.0)]);
        assert_relative_eq!(rep.spectral.projectors[0][(0, 0)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn h1_undeclared_eigenvalue_fails() {
        let t = dmatrix![0.0, 0.0; 0.0, -0.4];
        let rep = check_h1(&t, -0.5, 0.1, Some(1), &Tolerances::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        match rep.witness.unwrap() {
            Witness::Eigenvalue { value, .. } => assert_relative_eq!(value.re, -0.4, epsilon = 1e-12),
            w => panic!("unexpected witness {w:?}"),
        }
    }

    #[test]
    fn h1_boundary_is_indeterminate() {
        let t = dmatrix![0.0, 0.0; 0.0, -1.0];
        let rep = check_h1(&t, -1.0, 0.25, Some(1), &Tolerances::default()).unwrap();
        assert_eq!(rep.verdict, Verdict::Indeterminate);
    }

    #[test]
    fn h2_diagonal_gives_two() {
        let t = dmatrix![0.0, 0.0; 0.0, -1.0];
        let grid = YGrid::standard(1.0, &[]);
        let rep = check_h2(&t, -0.5, &WeightedSpace::unweighted(2), &grid, &Tolerances::default(), Execution::Sequential).unwrap();
        assert_relative_eq!(rep.k_grid, 2.0, epsilon = 1e-12);
        assert_eq!(rep.argmax_y, 0.0);
        assert!(rep.tail_bound < rep.k_grid);
    }

    #[test]
    fn h2_non_normal_exceeds_distance() {
        let t = dmatrix![-1.0, 10.0; 0.0, -1.1];
        let grid = YGrid::standard(10.0, &[]);
        let rep = check_h2(&t, -0.5, &WeightedSpace::unweighted(2), &grid, &Tolerances::default(), Execution::Sequential).unwrap();
        assert!(rep.k > 10.0 * 2.0, "{}", rep.k);
    }

    #[test]
    fn h2_on_spectrum_is_singular() {
        let t = dmatrix![0.0, 0.0; 0.0, -1.0];
        let grid = YGrid::standard(1.0, &[]);
        let err = check_h2(&t, 0.0, &WeightedSpace::unweighted(2), &grid, &Tolerances::default(), Execution::Sequential);
        assert!(matches!(err, Err(Error::Singular { .. })));
    }

    #[test]
    fn h3_examples() {
        let times = uniform_times(5.0, 21);
        let sp = WeightedSpace::unweighted(2);
        let t = dmatrix![0.0, 0.0; 0.0, -1.0];
        let rep = check_h3(&t, &sp, &times, Execution::Sequential).unwrap();
        assert_relative_eq!(rep.fit.prefactor, 1.0, epsilon = 1e-12);
        assert_relative_eq!(rep.fit.rate, 0.0, epsilon = 1e-12);
        let zero = RMatrix::zeros(2, 2);
        let rep0 = check_h3(&zero, &sp, &times, Execution::Sequential).unwrap();
        assert_eq!((rep0.fit.prefactor, rep0.fit.rate), (1.0, 0.0));
        let shifted = &t + RMatrix::identity(2, 2) * 0.3;
        let rep_s = check_h3(&shifted, &sp, &times, Execution::Sequential).unwrap();
        assert_relative_eq!(rep_s.fit.rate - rep.fit.rate, 0.3, epsilon = 1e-10);
    }

    #[test]
    fn h4_diagonal_instance() {
        let split = SplitOperator::new(dmatrix![0.0, 0.0; 0.0, 0.5], dmatrix![0.0, 0.0; 0.0, -1.5]).unwrap();
        let pair = EmbeddedSpacePair::new(WeightedSpace::unweighted(2), WeightedSpace::unweighted(2)).unwrap();
        let rep = check_h4(&split, &pair, &[c(-0.5)], &Tolerances::default(), Execution::Sequential).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_relative_eq!(rep.samples[0].b_inverse, 2.0, epsilon = 1e-12);
        assert_relative_eq!(rep.samples[0].a_b_inverse, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn h4_zero_regularizer_has_zero_mixed_norms() {
        let t = dmatrix![-1.0, 0.3; 0.0, -2.0];
        let split = SplitOperator::from_full(&t, RMatrix::zeros(2, 2)).unwrap();
        let pair = EmbeddedSpacePair::new(
            WeightedSpace::with_weights(vec![1.0, 0.5]).unwrap(),
            WeightedSpace::with_weights(vec![2.0, 3.0]).unwrap(),
        )
        .unwrap();
        let rep = check_h4(&split, &pair, &[c(-0.5), Complex64::new(-0.5, 2.0)], &Tolerances::default(), Execution::Sequential).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass);
        assert_eq!(rep.sup_a_b_inverse, 0.0);
        assert_eq!(rep.sup_b_inverse_a, 0.0);
    }

    #[test]
    fn h4_singular_sample_fails_with_witness() {
        let split = SplitOperator::new(dmatrix![0.0, 0.0; 0.0, 0.5], dmatrix![0.0, 0.0; 0.0, -1.5]).unwrap();
        let pair = EmbeddedSpacePair::new(WeightedSpace::unweighted(2), WeightedSpace::unweighted(2)).unwrap();
        let rep = check_h4(&split, &pair, &[c(-0.5), c(0.0)], &Tolerances::default(), Execution::Sequential).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(matches!(rep.witness, Some(Witness::SpectralPoint { xi, .. }) if xi == c(0.0)));
    }
}
