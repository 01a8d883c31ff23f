//! Resolvent scans along `Re z = a` for sparse generators.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::sparse::SparseOperator;
use crate::enlargement::{Verdict, Witness, YGrid};
use crate::operator::banded::smallest_singular_value;
use crate::operator::WeightedSpace;
use crate::par::{self, Execution};
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub y: f64,
    pub resolvent_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolventScan {
    pub verdict: Verdict,
    pub abscissa: f64,
    pub k_grid: f64,
    pub argmax_y: f64,
    pub tail_bound: f64,
    pub y_max: f64,
    /// `max(k_grid, tail_bound)`.
    pub k: f64,
    pub samples: Vec<ScanSample>,
    pub witness: Option<Witness>,
}

impl ResolventScan {
    pub fn table(&self) -> Result<crate::io::table::Table> {
        let mut t = crate::io::table::Table::new(&["y", "resolvent_norm"]);
        for s in &self.samples {
            t.push_row(&[s.y, s.resolvent_norm])?;
        }
        Ok(t)
    }
}

/// `‖T − a‖` bound in orthonormal coordinates of `space`, used to size the
/// default grid.
pub fn shifted_frame_bound(op: &SparseOperator, space: &WeightedSpace, a: f64) -> f64 {
    let frame = frame_of(op, space);
    frame.add_diagonal(&vec![-a; op.dim()]).norm_bound()
}

fn frame_of(op: &SparseOperator, space: &WeightedSpace) -> SparseOperator {
    let scale = space.frame_scale();
    let inv: Vec<f64> = scale.iter().map(|s| 1.0 / s).collect();
    op.scaled(&scale, &inv)
}

/// `K = max_y ‖(T − (a + iy))⁻¹‖_{ℒ(E)}` by banded LU and inverse
/// iteration for `σ_min`, plus the tail bound `1/(y_max − ‖Ť − a‖)`.
pub fn resolvent_scan_fp(
    op: &SparseOperator,
    space: &WeightedSpace,
    a: f64,
    y_grid: &YGrid,
    tol: &Tolerances,
    exec: Execution,
) -> Result<ResolventScan> {
    if !y_grid.is_symmetric() {
        return Err(Error::invalid("y-grid must be symmetric about 0 and contain 0"));
    }
    if space.dim() != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            actual: space.dim(),
        });
    }
    let frame = frame_of(op, space);
    let shifted_norm = frame.add_diagonal(&vec![-a; op.dim()]).norm_bound();
    let floor = tol.solve * frame.norm_bound().max(1.0);
    let samples = par::try_map(exec, &y_grid.points, |&y| {
        let z = Complex64::new(a, y);
        let band = frame.to_band(-z, Complex64::new(1.0, 0.0));
        let lu = band.factor().map_err(|_| Error::Singular { point: z, distance: 0.0 })?;
        let est = smallest_singular_value(&lu, 1e-12, usize::MAX);
        if est.sigma_min <= floor {
            return Err(Error::Singular {
                point: z,
                distance: est.sigma_min,
            });
        }
        Ok(ScanSample {
            y,
            resolvent_norm: 1.0 / est.sigma_min,
            converged: est.converged,
        })
    })?;
    let best = samples
        .iter()
        .max_by(|p, q| p.resolvent_norm.total_cmp(&q.resolvent_norm))
        .expect("non-empty grid");
    let tail_bound = if y_grid.y_max > shifted_norm {
        1.0 / (y_grid.y_max - shifted_norm)
    } else {
        f64::INFINITY
    };
    let k = best.resolvent_norm.max(tail_bound);
    let (verdict, witness) = if !k.is_finite() {
        (
            Verdict::Fail,
            Some(Witness::ImaginaryPart {
                y: y_grid.y_max,
                reason: "grid too short for the Neumann tail bound".into(),
            }),
        )
    } else if let Some(s) = samples.iter().find(|s| !s.converged) {
        (
            Verdict::Indeterminate,
            Some(Witness::ImaginaryPart {
                y: s.y,
                reason: "inverse iteration for the smallest singular value did not converge".into(),
            }),
        )
    } else {
        (Verdict::Pass, None)
    };
    Ok(ResolventScan {
        verdict,
        abscissa: a,
        k_grid: best.resolvent_norm,
        argmax_y: best.y,
        tail_bound,
        y_max: y_grid.y_max,
        k,
        samples,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enlargement::check_h2;
    use crate::fokker_planck::discretization::{FPDiscretization, Grid};
    use crate::fokker_planck::model::{EnlargedWeight, Potential, SwirlField, WeightKind};
    use crate::fokker_planck::spectrum::spectral_gap_h;
    use approx::assert_relative_eq;

    fn setup(n: usize) -> FPDiscretization {
        FPDiscretization::new(Grid::new(1, n, 8.0).unwrap(), Potential::radial(2.0).unwrap(), SwirlField::none()).unwrap()
    }

    #[test]
    fn matches_dense_scan_in_both_spaces() {
        let d = setup(80);
        let tol = Tolerances::default();
        let gap = spectral_gap_h(&d, &tol).unwrap();
        let a = gap.lambda_p / 2.0;
        let w = EnlargedWeight::new(WeightKind::Polynomial, 3.0, 1).unwrap();
        for space in [d.small_space().unwrap(), d.ambient_space(&w).unwrap()] {
            let grid = YGrid::standard(shifted_frame_bound(&d.generator, &space, a), &[]);
            let sparse = resolvent_scan_fp(&d.generator, &space, a, &grid, &tol, Execution::Parallel).unwrap();
            let dense = check_h2(&d.generator.to_dense(), a, &space, &grid, &tol, Execution::Parallel).unwrap();
            assert_eq!(sparse.verdict, Verdict::Pass, "{:?}", sparse.witness);
            for (s, (y, n)) in sparse.samples.iter().zip(&dense.samples) {
                assert_eq!(s.y, *y);
                assert_relative_eq!(s.resolvent_norm, *n, max_relative = 1e-6);
            }
            assert!(sparse.k.is_finite());
        }
    }

    #[test]
    fn symmetric_case_gives_distance_to_spectrum() {
        let d = setup(200);
        let tol = Tolerances::default();
        let gap = spectral_gap_h(&d, &tol).unwrap();
        let a = gap.lambda_p / 2.0;
        let space = d.small_space().unwrap();
        let grid = YGrid::standard(shifted_frame_bound(&d.generator, &space, a), &[]);
        let scan = resolvent_scan_fp(&d.generator, &space, a, &grid, &tol, Execution::Sequential).unwrap();
        // normal in H: the peak is 1/dist(a, spectrum) at y = 0
        assert_eq!(scan.argmax_y, 0.0);
        assert_relative_eq!(scan.k_grid, 1.0 / a.abs(), max_relative = 1e-8);
    }

    #[test]
    fn singular_point_is_reported() {
        let d = setup(40);
        let space = d.small_space().unwrap();
        let grid = YGrid::build(1e-3, 1e4, 5, &[]);
        let err = resolvent_scan_fp(&d.generator, &space, 0.0, &grid, &Tolerances::default(), Execution::Sequential);
        assert!(matches!(err, Err(Error::Singular { .. })), "{err:?}");
    }
}
