use std::collections::HashMap;

use nalgebra::{DVector, LU, Dyn};
use serde::{Deserialize, Serialize};

use super::expm::expm;
use super::{check_square, RMatrix};
use crate::{Error, Result};

/// Time integration scheme for `∂ₜf = Tf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ImplicitEuler,
    CrankNicolson,
    ReferenceExponential,
}

/// Solves `(Id − c·T) x = b` for one fixed `c`.
pub trait ShiftedSolve {
    fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>>;
}

/// A real generator that can be applied and implicitly stepped.
pub trait Generator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Factor `Id − c·T`.
    fn factor_implicit(&self, c: f64) -> Result<Box<dyn ShiftedSolve + '_>>;
    fn to_dense(&self) -> RMatrix;
}

struct DenseLu(LU<f64, Dyn, Dyn>);

impl ShiftedSolve for DenseLu {
    fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.0
            .solve(rhs)
            .ok_or_else(|| Error::invalid("singular implicit step matrix"))
    }
}

impl Generator for RMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self * x
    }

    fn factor_implicit(&self, c: f64) -> Result<Box<dyn ShiftedSolve + '_>> {
        let n = self.nrows();
        let m = RMatrix::identity(n, n) - self * c;
        Ok(Box::new(DenseLu(m.lu())))
    }

    fn to_dense(&self) -> RMatrix {
        self.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::invalid("empty time grid"));
    }
    if t_grid[0] < 0.0 || !t_grid[0].is_finite() {
        return Err(Error::invalid("time grid must start at a finite t >= 0"));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
        return Err(Error::invalid("time grid must be strictly increasing"));
    }
    Ok(())
}

/// `e^{tT} f0` at every `t` in the grid, by the scaling-and-squaring
/// exponential of each distinct increment.
pub fn semigroup_apply(t: &RMatrix, f0: &DVector<f64>, t_grid: &[f64]) -> Result<Trajectory> {
    let n = check_square(t)?;
    if f0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: f0.len(),
        });
    }
    validate_grid(t_grid)?;
    let mut cache: HashMap<u64, RMatrix> = HashMap::new();
    let mut states = Vec::with_capacity(t_grid.len());
    let mut current = f0.clone();
    let mut prev_t = 0.0;
    for &time in t_grid {
        let dt = time - prev_t;
        if dt > 0.0 {
            let prop = match cache.get(&dt.to_bits()) {
                Some(p) => p,
                None => {
                    let p = expm(&(t * dt)).map_err(|e| match e {
                        Error::MagnitudeGuard { .. } => Error::MagnitudeGuard { time },
                        other => other,
                    })?;
                    cache.entry(dt.to_bits()).or_insert(p)
                }
            };
            current = prop * &current;
        }
        if current.iter().any(|x| !x.is_finite() || x.abs() > 1e300) {
            return Err(Error::MagnitudeGuard { time });
        }
        states.push(current.clone());
        prev_t = time;
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
    })
}

/// Evolve with `scheme`, using steps no longer than `dt` within each grid
/// interval. `on_step(t, before, after)` runs after every implicit step and
/// may reject it.
pub fn evolve<G, F>(
    generator: &G,
    f0: &DVector<f64>,
    t_grid: &[f64],
    scheme: Scheme,
    dt: f64,
    mut on_step: F,
) -> Result<Trajectory>
where
    G: Generator + ?Sized,
    F: FnMut(f64, &DVector<f64>, &DVector<f64>) -> Result<()>,
{
    if f0.len() != generator.dim() {
        return Err(Error::DimensionMismatch {
            expected: generator.dim(),
            actual: f0.len(),
        });
    }
    if scheme == Scheme::ReferenceExponential {
        return semigroup_apply(&generator.to_dense(), f0, t_grid);
    }
    validate_grid(t_grid)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid(format!("time step {dt} must be positive")));
    }
    let mut solvers: HashMap<u64, Box<dyn ShiftedSolve + '_>> = HashMap::new();
    let mut states = Vec::with_capacity(t_grid.len());
    let mut current = f0.clone();
    let mut now = 0.0;
    for &target in t_grid {
        let span = target - now;
        if span > 0.0 {
            let steps = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
            let h = span / steps as f64;
            let c = match scheme {
                Scheme::ImplicitEuler => h,
                Scheme::CrankNicolson => 0.5 * h,
                Scheme::ReferenceExponential => unreachable!(),
            };
            if !solvers.contains_key(&c.to_bits()) {
                solvers.insert(c.to_bits(), generator.factor_implicit(c)?);
            }
            let solver = &solvers[&c.to_bits()];
            for k in 0..steps {
                let rhs = match scheme {
                    Scheme::CrankNicolson => &current + generator.apply(&current) * c,
                    _ => current.clone(),
                };
                let next = solver.solve(&rhs)?;
                let t_next = now + (k + 1) as f64 * h;
                if next.iter().any(|x| !x.is_finite()) {
                    return Err(Error::StepRejected {
                        time: t_next,
                        reason: "non-finite state".into(),
                    });
                }
                on_step(t_next, &current, &next)?;
                current = next;
            }
        }
        states.push(current.clone());
        now = target;
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
    })
}
