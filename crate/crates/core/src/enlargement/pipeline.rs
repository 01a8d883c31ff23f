//! Every check in sequence on one generated instance.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::equivalence::{verify_decay_from_resolvent, verify_resolvent_from_decay, ConverseReport, DecayVerification};
use super::factorization::{enlargement_bound_chain, verify_factorization, BoundChain, FactorizationReport};
use super::hypotheses::{check_h1, check_h2, check_h3, check_h4, HypothesisReport};
use super::instance::GeneratedInstance;
use super::sampling::{XiSampler, YGrid};
use super::types::{Verdict, Witness};
use crate::operator::{congruence, sigma_max, RMatrix};
use crate::par::Execution;
use crate::{Result, Tolerances};

/// Factorization residual allowed per unit of `cond(𝒯 − ξ)`.
pub const FACTORIZATION_RESIDUAL: f64 = 1e-9;
/// Relative agreement of the factorized and direct inverses.
pub const FACTORIZATION_ORACLE: f64 = 1e-8;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorizationCheck {
    pub verdict: Verdict,
    pub report: FactorizationReport,
    pub witness: Option<Witness>,
}

/// Outcome of [`run_instance`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceRun {
    pub hypotheses: HypothesisReport,
    pub factorization: FactorizationCheck,
    pub chain: BoundChain,
    /// Decay in the enlarged space, when the localization, resolvent and
    /// semigroup checks all pass.
    pub decay: Option<DecayVerification>,
    pub converse: Option<ConverseReport>,
    pub xi_count: usize,
}

impl InstanceRun {
    pub fn chain_verdict(&self) -> Verdict {
        if self.chain.violations == 0 {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn verdict(&self) -> Verdict {
        let mut v = self
            .hypotheses
            .verdict()
            .and(self.factorization.verdict)
            .and(self.chain_verdict());
        for extra in [self.decay.as_ref().map(|d| d.verdict), self.converse.as_ref().map(|c| c.verdict)] {
            v = v.and(extra.unwrap_or(Verdict::Indeterminate));
        }
        v
    }
}

/// Standard ordinate grid for `T` in the orthonormal frame of `space`.
pub fn standard_y_grid(t: &RMatrix, a: f64, space: &crate::operator::WeightedSpace, extra: &[f64]) -> Result<YGrid> {
    let frame = congruence(t, space, space)?;
    let n = frame.nrows();
    let scale = sigma_max(&(&frame - RMatrix::identity(n, n) * a))?;
    Ok(YGrid::standard(scale, extra))
}

/// Decay rate used for the enlarged-space certificate: just right of the
/// line `Re z = a`.
pub fn certificate_rate(a: f64) -> f64 {
    a + 1e-3 * a.abs().max(1e-3)
}

/// Localization, resolvent and semigroup checks in `H` (the last two only
/// once localization passes); decomposition,
/// factorization and bound chain on the sampled ξ; then decay in `ℋ` and
/// the converse round trip.
pub fn run_instance(
    inst: &GeneratedInstance,
    sampler: &XiSampler,
    tol: &Tolerances,
    exec: Execution,
) -> Result<InstanceRun> {
    let cert = &inst.certificate;
    let t = inst.split.full();
    let small = inst.pair.small();
    let ambient = inst.pair.ambient();
    let h1 = check_h1(t, cert.a, cert.r, Some(cert.centers.len()), tol)?;
    let times = inst.time_grid();
    // the resolvent scan is meaningless (and may hit the spectrum) unless
    // the spectrum is localized first
    let (h2, h3) = if h1.verdict.passed() {
        let extra: Vec<f64> = h1.spectral.eigenvalues.iter().map(|z| z.im).collect();
        let grid = standard_y_grid(t, cert.a, small, &extra)?;
        (Some(check_h2(t, cert.a, small, &grid, tol, exec)?), Some(check_h3(t, small, &times, exec)?))
    } else {
        (None, None)
    };
    let xis: Vec<Complex64> = inst.xi_samples(sampler);
    let h4 = check_h4(&inst.split, &inst.pair, &xis, tol, exec)?;

    let report = verify_factorization(&inst.split, &inst.pair, &xis, tol, exec)?;
    let worst = report
        .samples
        .iter()
        .find(|s| s.residual > FACTORIZATION_RESIDUAL * s.cond || s.oracle_gap > FACTORIZATION_ORACLE);
    let factorization = FactorizationCheck {
        verdict: if worst.is_none() { Verdict::Pass } else { Verdict::Fail },
        witness: worst.map(|s| Witness::SpectralPoint {
            xi: s.xi,
            reason: format!("residual {:e} (cond {:e}), oracle gap {:e}", s.residual, s.cond, s.oracle_gap),
        }),
        report,
    };
    let chain = enlargement_bound_chain(&inst.split, &inst.pair, &h4, tol, exec)?;

    let prerequisites = match (&h2, &h3) {
        (Some(h2), Some(h3)) => h1.verdict.and(h2.verdict).and(h3.verdict).passed(),
        _ => false,
    };
    let (decay, converse) = if prerequisites {
        let d = verify_decay_from_resolvent(t, ambient, &h1.spectral, certificate_rate(cert.a), &times, exec)?;
        let c = verify_resolvent_from_decay(t, ambient, &d.certificate, &times, tol, exec)?;
        (Some(d), Some(c))
    } else {
        (None, None)
    };
    Ok(InstanceRun {
        hypotheses: HypothesisReport {
            schema_version: HypothesisReport::SCHEMA_VERSION,
            h1,
            h2,
            h3,
            h4: Some(h4),
        },
        factorization,
        chain,
        decay,
        converse,
        xi_count: xis.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enlargement::{generate_instance, InstanceOptions};

    #[test]
    fn pinned_instance_passes_everything() {
        let inst = generate_instance(1, 2, InstanceOptions::default()).unwrap();
        let run = run_instance(&inst, &XiSampler::light(), &Tolerances::default(), Execution::Sequential).unwrap();
        assert_eq!(run.verdict(), Verdict::Pass, "{:#?}", run.hypotheses.h1.witness);
        assert!(run.xi_count >= 25);
        assert!(run.converse.unwrap().laplace.len() >= 50);
    }

    #[test]
    fn abscissa_on_the_spectrum_is_indeterminate() {
        let mut inst = generate_instance(1, 2, InstanceOptions::default()).unwrap();
        inst.certificate.a = -1.0;
        let run = run_instance(&inst, &XiSampler::light(), &Tolerances::default(), Execution::Sequential).unwrap();
        assert_eq!(run.hypotheses.h1.verdict, Verdict::Indeterminate);
        assert!(run.hypotheses.h2.is_none() && run.decay.is_none());
        assert_eq!(run.verdict(), Verdict::Indeterminate);
    }

    #[test]
    fn random_instances_pass() {
        for seed in 2..6 {
            let inst = generate_instance(seed, 8, InstanceOptions { discrete: 2, ..Default::default() }).unwrap();
            let run = run_instance(&inst, &XiSampler::light(), &Tolerances::default(), Execution::Parallel).unwrap();
            assert_eq!(run.verdict(), Verdict::Pass, "seed {seed}");
        }
    }

    #[test]
    fn purely_isolated_spectrum_passes() {
        for seed in [31, 93] {
            let inst = generate_instance(seed, 2, InstanceOptions { discrete: 2, ..Default::default() }).unwrap();
            let run = run_instance(&inst, &XiSampler::light(), &Tolerances::default(), Execution::Sequential).unwrap();
            assert_eq!(run.verdict(), Verdict::Pass, "seed {seed}");
        }
    }
}
