//! Decay estimates from resolvent bounds and back.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hypotheses::{check_h1, check_h2, check_h3, H1Report, H2Report, H3Report};
use super::sampling::YGrid;
use super::types::{SpectralReport, Verdict, Witness};
use crate::operator::decay::{certify_rate, fit_exponential_decay, DecayFit, FitOptions};
use crate::operator::norm::sigma_max;
use crate::operator::{congruence, expm, shifted, CMatrix, RMatrix, WeightedSpace};
use crate::par::{self, Execution};
use crate::{Error, Result, Tolerances};

/// `(a, C_a, ξⱼ, Πⱼ)` with `‖e^{tT} − Σ e^{ξⱼt}Πⱼ‖ ≤ C_a e^{at}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub abscissa: f64,
    pub prefactor: f64,
    pub centers: Vec<Complex64>,
    #[serde(skip)]
    pub projectors: Vec<CMatrix>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayVerification {
    pub verdict: Verdict,
    /// Regression envelope of the deviation norms.
    pub fit: DecayFit,
    /// Minimal envelope at the requested rate.
    pub certificate: DecayCertificate,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub witness: Option<Witness>,
}

fn frame_projectors(projectors: &[CMatrix], space: &WeightedSpace) -> Result<Vec<CMatrix>> {
    projectors.iter().map(|p| congruence(p, space, space)).collect()
}

/// `‖e^{tT} − Σ e^{ξⱼt}Πⱼ‖_{ℒ(E)}` on `times`.
pub fn deviation_norms(
    t: &RMatrix,
    space: &WeightedSpace,
    centers: &[Complex64],
    projectors: &[CMatrix],
    times: &[f64],
    exec: Execution,
) -> Result<Vec<f64>> {
    if centers.len() != projectors.len() {
        return Err(Error::invalid("one projector per isolated eigenvalue"));
    }
    let frame = congruence(t, space, space)?;
    let pf = frame_projectors(projectors, space)?;
    par::try_map(exec, times, |&time| {
        let mut d = expm(&(&frame * time))?.map(|x| Complex64::new(x, 0.0));
        for (xi, p) in centers.iter().zip(&pf) {
            d -= p * (xi * time).exp();
        }
        sigma_max(&d)
    })
}

/// Sample the deviation `D(t)` from the isolated part of the spectrum and
/// pass iff its fitted rate is at most `lambda`. `lambda` must exceed the
/// half-plane abscissa of `report`.
pub fn verify_decay_from_resolvent(
    t: &RMatrix,
    space: &WeightedSpace,
    report: &SpectralReport,
    lambda: f64,
    times: &[f64],
    exec: Execution,
) -> Result<DecayVerification> {
    if lambda <= report.abscissa {
        return Err(Error::invalid(format!(
            "rate {lambda} must exceed the abscissa {}",
            report.abscissa
        )));
    }
    let norms = deviation_norms(t, space, &report.discrete, &report.projectors, times, exec)?;
    let fit = fit_exponential_decay(times, &norms, FitOptions::default())?;
    let env = certify_rate(times, &norms, lambda)?;
    // with no stable spectrum the deviation is rounding noise and any
    // fitted rate is meaningless
    let mut weight = 1.0;
    for p in frame_projectors(&report.projectors, space)? {
        weight += sigma_max(&p)?;
    }
    let floor = 1e3 * f64::EPSILON * t.nrows() as f64 * weight;
    let vanishing = norms.iter().all(|&x| x <= floor);
    let (verdict, witness) = if vanishing || fit.rate <= lambda {
        (Verdict::Pass, None)
    } else {
        (
            Verdict::Fail,
            Some(Witness::Time {
                t: fit.fit_window.1,
                reason: format!("fitted rate {} exceeds {lambda}", fit.rate),
            }),
        )
    };
    Ok(DecayVerification {
        verdict,
        fit,
        certificate: DecayCertificate {
            abscissa: lambda,
            prefactor: env.prefactor,
            centers: report.discrete.clone(),
            projectors: report.projectors.clone(),
        },
        times: times.to_vec(),
        norms,
        witness,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceSample {
    pub z: Complex64,
    /// `‖R(z) − Σ Πⱼ/(ξⱼ − z)‖_{ℒ(E)}`
    pub lhs: f64,
    /// `C_a/(Re z − a)·(1 + tol)`
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConverseReport {
    pub verdict: Verdict,
    /// Largest relative commutator `‖Πe^{tT} − e^{tT}Π‖ / (‖Π‖‖e^{tT}‖)`.
    pub commutation: f64,
    pub shifted_abscissa: f64,
    pub h1: Option<H1Report>,
    pub h2: Option<H2Report>,
    pub h3: Option<H3Report>,
    pub laplace: Vec<LaplaceSample>,
    pub witness: Option<Witness>,
}

/// Points right of `Re z = a`, at least 50 of them, keeping clear of the
/// isolated eigenvalues.
pub fn laplace_points(a: f64, centers: &[Complex64]) -> Vec<Complex64> {
    let s = a.abs().max(0.1);
    let offsets = [1e-2, 3e-2, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0];
    let heights = [0.0, 0.5, -0.5, 2.0, -2.0, 8.0, -8.0];
    let mut out = Vec::new();
    for d in offsets {
        for h in heights {
            let z = Complex64::new(a + d * s, h * s);
            if centers.iter().all(|c| (z - c).norm() > 0.1 * s) {
                out.push(z);
            }
        }
    }
    out
}

/// Converse direction: from a decay certificate, check commutation, then
/// the three hypotheses at `a' = a + δ`, then the Laplace-transform bound.
pub fn verify_resolvent_from_decay(
    t: &RMatrix,
    space: &WeightedSpace,
    cert: &DecayCertificate,
    times: &[f64],
    tol: &Tolerances,
    exec: Execution,
) -> Result<ConverseReport> {
    let n = t.nrows();
    let frame = congruence(t, space, space)?;
    let pf = frame_projectors(&cert.projectors, space)?;
    let a = cert.abscissa;
    let mut rep = ConverseReport {
        verdict: Verdict::Pass,
        commutation: 0.0,
        shifted_abscissa: a,
        h1: None,
        h2: None,
        h3: None,
        laplace: Vec::new(),
        witness: None,
    };

    let probe: Vec<f64> = [0.25, 1.0, 4.0].iter().map(|x| x / a.abs().max(0.1)).collect();
    for &time in &probe {
        let e = expm(&(&frame * time))?.map(|x| Complex64::new(x, 0.0));
        let en = sigma_max(&e)?;
        for p in &pf {
            let rel = sigma_max(&(p * &e - &e * p))? / (sigma_max(p)? * en).max(1.0);
            rep.commutation = rep.commutation.max(rel);
            if rel > tol.commute {
                rep.verdict = Verdict::Fail;
                rep.witness = Some(Witness::Time {
                    t: time,
                    reason: format!("projector does not commute with the semigroup ({rel:e})"),
                });
                return Ok(rep);
            }
        }
    }

    let delta = 1e-3 * a.abs().max(1e-3);
    let a_shift = a + delta;
    rep.shifted_abscissa = a_shift;
    let mut r = f64::INFINITY;
    for (i, c) in cert.centers.iter().enumerate() {
        r = r.min(0.5 * (c.re - a_shift));
        for d in &cert.centers[i + 1..] {
            r = r.min((c - d).norm() / 3.0);
        }
    }
    if !r.is_finite() {
        r = 1.0;
    }
    if r <= 0.0 {
        rep.verdict = Verdict::Fail;
        rep.witness = Some(Witness::Eigenvalue {
            value: cert.centers[0],
            reason: "certificate eigenvalue left of the shifted abscissa".into(),
        });
        return Ok(rep);
    }
    let h1 = check_h1(t, a_shift, r, Some(cert.centers.len()), tol)?;
    rep.verdict = rep.verdict.and(h1.verdict);
    if rep.witness.is_none() {
        rep.witness = h1.witness.clone();
    }
    rep.h1 = Some(h1);

    let eig_im: Vec<f64> = cert.centers.iter().map(|c| c.im).collect();
    let scale = sigma_max(&(&frame - DMatrix::identity(n, n) * a_shift))?;
    match check_h2(t, a_shift, space, &YGrid::standard(scale, &eig_im), tol, exec) {
        Ok(h2) => {
            rep.verdict = rep.verdict.and(h2.verdict);
            rep.h2 = Some(h2);
        }
        Err(Error::Singular { point, .. }) => {
            rep.verdict = Verdict::Fail;
            rep.witness.get_or_insert(Witness::SpectralPoint {
                xi: point,
                reason: "spectrum on the shifted line".into(),
            });
        }
        Err(e) => return Err(e),
    }
    let h3 = check_h3(t, space, times, exec)?;
    rep.h3 = Some(h3);

    let zs = laplace_points(a, &cert.centers);
    let samples = par::try_map(exec, &zs, |&z| {
        let mut diff = shifted(&frame, z)
            .try_inverse()
            .ok_or(Error::Singular { point: z, distance: 0.0 })?;
        for (xi, p) in cert.centers.iter().zip(&pf) {
            diff -= p / (xi - z);
        }
        Ok::<_, Error>(LaplaceSample {
            z,
            lhs: sigma_max(&diff)?,
            rhs: cert.prefactor / (z.re - a) * (1.0 + tol.laplace),
        })
    })?;
    if let Some(bad) = samples.iter().find(|s| s.lhs > s.rhs) {
        rep.verdict = Verdict::Fail;
        rep.witness.get_or_insert(Witness::SpectralPoint {
            xi: bad.z,
            reason: format!("Laplace bound violated: {:e} > {:e}", bad.lhs, bad.rhs),
        });
    }
    rep.laplace = samples;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enlargement::hypotheses::uniform_times;
    use approx::assert_relative_eq;
    use nalgebra::dmatrix;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn diag_report() -> SpectralReport {
        let p = dmatrix![c(1.0), c(0.0); c(0.0), c(0.0)];
        SpectralReport::from_parts(-0.95, 0.25, vec![c(0.0)], vec![p])
    }

    #[test]
    fn decay_of_diagonal() {
        let t = dmatrix![0.0, 0.0; 0.0, -1.0];
        let sp = WeightedSpace::unweighted(2);
        let times = uniform_times(10.0, 41);
        let ok = verify_decay_from_resolvent(&t, &sp, &diag_report(), -0.9, &times, Execution::Sequential).unwrap();
        assert_eq!(ok.verdict, Verdict::Pass);
        assert_relative_eq!(ok.fit.rate, -1.0, epsilon = 1e-9);
        assert_relative_eq!(ok.fit.prefactor, 1.0, epsilon = 1e-9);
        let bad = verify_decay_from_resolvent(&t, &sp, &diag_report(), -1.0, &times, Execution::Sequential);
        assert!(bad.is_err(), "rate below abscissa is rejected");
        let mut rep = diag_report();
        rep.abscissa = -1.5;
        let bad = verify_decay_from_resolvent(&t, &sp, &rep, -1.1, &times, Execution::Sequential).unwrap();
        assert_eq!(bad.verdict, Verdict::Fail);
    }

    #[test]
    fn transient_growth_needs_large_prefactor() {
        let t = dmatrix![-1.0, 10.0; 0.0, -1.1];
        let sp = WeightedSpace::unweighted(2);
        let rep = SpectralReport::from_parts(-0.95, 0.1, vec![], vec![]);
        let times = uniform_times(30.0, 121);
        let v = verify_decay_from_resolvent(&t, &sp, &rep, -0.9, &times, Execution::Sequential).unwrap();
        assert_eq!(v.verdict, Verdict::Pass);
        assert!(v.fit.prefactor > 1.0);
        assert!(v.certificate.prefactor > 1.0);
    }

    #[test]
    fn converse_accepts_true_and_rejects_wrong_projector() {
        let t = dmatrix![0.0, 0.0; 0.0, -1.0];
        let sp = WeightedSpace::unweighted(2);
        let tol = Tolerances::default();
        let times = uniform_times(10.0, 41);
        let good = DecayCertificate {
            abscissa: -1.0,
            prefactor: 1.0,
            centers: vec![c(0.0)],
            projectors: vec![dmatrix![c(1.0), c(0.0); c(0.0), c(0.0)]],
        };
        let rep = verify_resolvent_from_decay(&t, &sp, &good, &times, &tol, Execution::Sequential).unwrap();
        assert_eq!(rep.verdict, Verdict::Pass, "{:?}", rep.witness);
        assert!(rep.laplace.len() >= 50);

        let wrong = DecayCertificate {
            projectors: vec![dmatrix![c(0.0), c(0.0); c(0.0), c(1.0)]],
            ..good
        };
        let rep = verify_resolvent_from_decay(&t, &sp, &wrong, &times, &tol, Execution::Sequential).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(rep.commutation <= tol.commute);
        assert!(rep.laplace.iter().any(|s| s.lhs > s.rhs));
    }

    #[test]
    fn non_commuting_projector_is_rejected_first() {
        let t = dmatrix![0.0, 1.0; 0.0, -1.0];
        let sp = WeightedSpace::unweighted(2);
        let cert = DecayCertificate {
            abscissa: -1.0,
            prefactor: 10.0,
            centers: vec![c(0.0)],
            projectors: vec![dmatrix![c(1.0), c(0.0); c(0.0), c(0.0)]],
        };
        let rep = verify_resolvent_from_decay(&t, &sp, &cert, &uniform_times(5.0, 11), &Tolerances::default(), Execution::Sequential).unwrap();
        assert_eq!(rep.verdict, Verdict::Fail);
        assert!(rep.h1.is_none());
        assert!(matches!(rep.witness, Some(Witness::Time { .. })));
    }
}
