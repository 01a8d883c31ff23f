//! Relaxation to equilibrium measured in `H` and in the enlarged space.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::discretization::FPDiscretization;
use super::sparse::SparseGenerator;
use crate::io::table::Table;
use crate::operator::decay::{fit_exponential_decay, DecayFit, FitOptions};
use crate::operator::norm::largest_singular_triplet;
use crate::operator::semigroup::evolve;
use crate::operator::{congruence, expm, sigma_max, Scheme, WeightedSpace};
use crate::par::{self, Execution};
use crate::{Error, Result, Tolerances};

/// Largest problem evolved with a dense matrix exponential.
pub const REFERENCE_LIMIT: usize = 600;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayExperiment {
    pub scheme: Scheme,
    pub times: Vec<f64>,
    /// `‖fₜ − ⟨f₀⟩μ‖_H`.
    pub norm_h: Vec<f64>,
    /// `‖fₜ − ⟨f₀⟩μ‖_ℋ`.
    pub norm_hh: Vec<f64>,
    pub mass: Vec<f64>,
    /// Largest mass change over a single step, relative to `Σ|f| h^d`.
    pub max_mass_drift: f64,
    /// Envelope of the ℋ-deviation; `None` when the deviation vanishes.
    pub fit: Option<DecayFit>,
}

impl DecayExperiment {
    /// Columns `t, norm_H, norm_HH, mass`.
    pub fn table(&self) -> Result<Table> {
        let mut t = Table::new(&["t", "norm_H", "norm_HH", "mass"]);
        for i in 0..self.times.len() {
            t.push_row(&[self.times[i], self.norm_h[i], self.norm_hh[i], self.mass[i]])?;
        }
        Ok(t)
    }

    /// Whether `‖dev(t)‖_ℋ ≤ C e^{λt} ‖dev(0)‖_ℋ (1 + rel_tol)` at every sample.
    pub fn within(&self, prefactor: f64, rate: f64, rel_tol: f64) -> bool {
        let d0 = self.norm_hh[0];
        self.times
            .iter()
            .zip(&self.norm_hh)
            .all(|(&t, &n)| n <= prefactor * (rate * t).exp() * d0 * (1.0 + rel_tol))
    }
}

/// Evolve `f0` and record the deviation from `⟨f₀⟩μ_h`. Implicit schemes
/// check discrete mass after every step.
#[allow(clippy::too_many_arguments)]
pub fn decay_experiment(
    disc: &FPDiscretization,
    ambient: &WeightedSpace,
    f0: &DVector<f64>,
    times: &[f64],
    scheme: Scheme,
    dt: f64,
    tol: &Tolerances,
) -> Result<DecayExperiment> {
    if f0.len() != disc.dim() {
        return Err(Error::DimensionMismatch {
            expected: disc.dim(),
            actual: f0.len(),
        });
    }
    if scheme == Scheme::ReferenceExponential && disc.dim() > REFERENCE_LIMIT {
        return Err(Error::invalid(format!(
            "reference exponential limited to {REFERENCE_LIMIT} unknowns, got {}",
            disc.dim()
        )));
    }
    let small = disc.small_space()?;
    let cell = disc.grid.cell_volume();
    let generator = SparseGenerator {
        op: &disc.generator,
        tol_solve: tol.solve,
    };
    let mut drift = 0.0f64;
    let limit = 10.0 * tol.solve;
    let traj = evolve(&generator, f0, times, scheme, dt, |t, before, after| {
        let total = before.iter().map(|x| x.abs()).sum::<f64>() * cell;
        let change = (after.sum() - before.sum()).abs() * cell / total.max(f64::MIN_POSITIVE);
        drift = drift.max(change);
        if change > limit {
            return Err(Error::StepRejected {
                time: t,
                reason: format!("mass changed by {change:e} (relative) in one step"),
            });
        }
        Ok(())
    })?;
    let m0 = disc.mass(f0);
    let mu = disc.equilibrium();
    let (mut norm_h, mut norm_hh, mut mass) = (Vec::new(), Vec::new(), Vec::new());
    for state in &traj.states {
        let dev = state - &mu * m0;
        norm_h.push(small.norm(&dev)?);
        norm_hh.push(ambient.norm(&dev)?);
        mass.push(disc.mass(state));
    }
    if scheme == Scheme::ReferenceExponential {
        let total = f0.iter().map(|x| x.abs()).sum::<f64>() * cell;
        drift = mass.iter().map(|m| (m - m0).abs() / total).fold(0.0, f64::max);
    }
    let scale = ambient.norm(f0)?;
    let fit = if norm_hh[0] <= 1e3 * f64::EPSILON * scale {
        None
    } else {
        Some(fit_exponential_decay(times, &norm_hh, FitOptions::default())?)
    };
    Ok(DecayExperiment {
        scheme,
        times: times.to_vec(),
        norm_h,
        norm_hh,
        mass,
        max_mass_drift: drift,
        fit,
    })
}

/// `D(t) = sup ‖e^{t𝒯}g‖_ℋ / ‖g‖_ℋ` over mass-free `g`, with the datum
/// attaining the largest `D(t)e^{−λt}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniformEnvelope {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub fit: DecayFit,
    /// Time of the largest `D(t)e^{−λt}`.
    pub witness_time: f64,
    /// `D(t)e^{−λt}` at `witness_time`.
    pub peak_ratio: f64,
    /// Mass-free datum with `‖g‖_ℋ = 1` realizing `D(witness_time)`.
    #[serde(skip)]
    pub witness: DVector<f64>,
}

/// Dense computation of [`UniformEnvelope`]; needs `N ≤ REFERENCE_LIMIT`.
pub fn uniform_decay_envelope(
    disc: &FPDiscretization,
    ambient: &WeightedSpace,
    times: &[f64],
    exec: Execution,
) -> Result<UniformEnvelope> {
    let n = disc.dim();
    if n > REFERENCE_LIMIT {
        return Err(Error::invalid(format!(
            "dense envelope limited to {REFERENCE_LIMIT} unknowns, got {n}"
        )));
    }
    let frame = congruence(&disc.generator.to_dense(), ambient, ambient)?;
    let scale = ambient.frame_scale();
    // mass of g = v/s is Σ vᵢ h^d / sᵢ
    let mut c = DVector::from_fn(n, |i, _| disc.grid.cell_volume() / scale[i]);
    c /= c.norm();
    let restrict = DMatrix::identity(n, n) - &c * c.transpose();
    let evolved = |t: f64| -> Result<DMatrix<f64>> { Ok(expm(&(&frame * t))? * &restrict) };
    let norms = par::try_map(exec, times, |&t| sigma_max(&evolved(t)?))?;
    let fit = fit_exponential_decay(times, &norms, FitOptions::default())?;
    let (idx, peak_ratio) = times
        .iter()
        .zip(&norms)
        .map(|(&t, &d)| d * (-fit.rate * t).exp())
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    let (_, v) = largest_singular_triplet(&evolved(times[idx])?)?;
    let mut g = DVector::from_fn(n, |i, _| v[i] / scale[i]);
    g /= ambient.norm(&g)?;
    Ok(UniformEnvelope {
        times: times.to_vec(),
        norms,
        fit,
        witness_time: times[idx],
        peak_ratio,
        witness: g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enlargement::uniform_times;
    use crate::fokker_planck::discretization::Grid;
    use crate::fokker_planck::model::{EnlargedWeight, Potential, SwirlField, WeightKind};
    use crate::fokker_planck::spectrum::{poincare_mode, spectral_gap_h};
    use approx::assert_relative_eq;

    fn setup(n: usize) -> (FPDiscretization, WeightedSpace) {
        let d = FPDiscretization::new(Grid::new(1, n, 8.0).unwrap(), Potential::radial(2.0).unwrap(), SwirlField::none()).unwrap();
        let w = EnlargedWeight::new(WeightKind::Polynomial, 3.0, 1).unwrap();
        let amb = d.ambient_space(&w).unwrap();
        (d, amb)
    }

    #[test]
    fn equilibrium_does_not_move() {
        let (d, amb) = setup(200);
        let times = uniform_times(2.0, 9);
        let e = decay_experiment(&d, &amb, &d.equilibrium(), &times, Scheme::ImplicitEuler, 0.01, &Tolerances::default()).unwrap();
        assert!(e.fit.is_none());
        assert!(e.norm_hh.iter().all(|&v| v < 1e-12));
        assert!(e.mass.iter().all(|&m| (m - 1.0).abs() < 1e-12));
    }

    #[test]
    fn single_mode_decays_at_the_gap() {
        let (d, amb) = setup(300);
        let gap = spectral_gap_h(&d, &Tolerances::default()).unwrap();
        let f0 = d.equilibrium() + poincare_mode(&d, &gap).unwrap() * 1e-3;
        let times = uniform_times(4.0, 41);
        let e = decay_experiment(&d, &amb, &f0, &times, Scheme::ReferenceExponential, 0.0, &Tolerances::default()).unwrap();
        let fit = e.fit.unwrap();
        assert_relative_eq!(fit.rate, gap.lambda_p, max_relative = 1e-6);
        // the H-norm of a single mode decays exactly at λ_P
        for (t, n) in times.iter().zip(&e.norm_h) {
            assert_relative_eq!(*n, e.norm_h[0] * (gap.lambda_p * t).exp(), max_relative = 1e-6);
        }
        assert!(e.max_mass_drift < 1e-12);
    }

    #[test]
    fn implicit_schemes_conserve_mass() {
        let (d, amb) = setup(400);
        let f0 = d.sample(|x| (-(x[0] - 0.7).powi(2)).exp());
        let times = uniform_times(3.0, 31);
        for scheme in [Scheme::ImplicitEuler, Scheme::CrankNicolson] {
            let e = decay_experiment(&d, &amb, &f0, &times, scheme, 0.01, &Tolerances::default()).unwrap();
            assert!(e.max_mass_drift < 1e-12, "{:?} {}", scheme, e.max_mass_drift);
            let fit = e.fit.unwrap();
            assert!(fit.rate < 0.0);
            assert_eq!(e.table().unwrap().rows(), 31);
        }
    }

    #[test]
    fn envelope_witness_exceeds_unit_prefactor() {
        let (d, amb) = setup(160);
        let gap = spectral_gap_h(&d, &Tolerances::default()).unwrap();
        let times = uniform_times(6.0, 31);
        let env = uniform_decay_envelope(&d, &amb, &times, Execution::Parallel).unwrap();
        assert!(env.fit.rate < 0.0);
        assert!(env.fit.rate >= gap.lambda_p - 0.1 * gap.lambda_p.abs(), "{}", env.fit.rate);
        assert_relative_eq!(env.norms[0], 1.0, epsilon = 1e-10);
        assert!(d.mass(&env.witness).abs() < 1e-12);
        if env.peak_ratio > 1.0 {
            let f0 = d.equilibrium() + &env.witness * 1e-2;
            let e = decay_experiment(&d, &amb, &f0, &times, Scheme::ReferenceExponential, 0.0, &Tolerances::default()).unwrap();
            let k = times.iter().position(|&t| t == env.witness_time).unwrap();
            assert!(e.norm_hh[k] > e.norm_hh[0] * (env.fit.rate * times[k]).exp());
        }
    }
}
