//! Problem definitions read from JSON.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::discretization::{FPDiscretization, Grid};
use super::model::{EnlargedWeight, Potential, SwirlField};
use crate::operator::Scheme;
use crate::{Error, Result, Tolerances};

/// Initial datum before normalization to unit mass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", deny_unknown_fields)]
pub enum InitialData {
    /// `(1 + |x|²)^{−power}`.
    HeavyTail { power: f64 },
    /// The discrete equilibrium itself.
    Equilibrium,
    /// `exp(−|x − center|²/width²)`.
    Bump { center: Vec<f64>, width: f64 },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::HeavyTail { power: 2.0 }
    }
}

impl InitialData {
    /// Node values scaled to unit mass.
    pub fn sample(&self, disc: &FPDiscretization) -> Result<DVector<f64>> {
        let f = match self {
            InitialData::HeavyTail { power } => {
                disc.sample(|x| (1.0 + x.iter().map(|v| v * v).sum::<f64>()).powf(-power))
            }
            InitialData::Equilibrium => disc.equilibrium(),
            InitialData::Bump { center, width } => {
                if center.len() != disc.grid.d || !(*width > 0.0) {
                    return Err(Error::invalid("bump needs one centre coordinate per dimension and width > 0"));
                }
                disc.sample(|x| {
                    let r2: f64 = x.iter().zip(center).map(|(a, b)| (a - b).powi(2)).sum();
                    (-r2 / (width * width)).exp()
                })
            }
        };
        let m = disc.mass(&f);
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::invalid("initial datum has no mass on the grid"));
        }
        Ok(f / m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FpProblem {
    pub d: usize,
    pub s: f64,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub weight: EnlargedWeight,
    #[serde(default)]
    pub swirl: SwirlField,
    pub scheme: Scheme,
    pub t_max: f64,
    pub dt: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub initial: InitialData,
    /// Abscissa for the decomposition and the scans; `λ_P/2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_a: Option<f64>,
}

impl FpProblem {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        Potential::radial(self.s)?;
        self.weight.validate(self.d)?;
        self.swirl.validate()?;
        Grid::new(self.d, self.n, self.l)?;
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::invalid(format!("t_max = {} must be positive", self.t_max)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt <= self.t_max) {
            return Err(Error::invalid(format!("dt = {} must lie in (0, t_max]", self.dt)));
        }
        if let Some(a) = self.target_a {
            if !(a < 0.0) {
                return Err(Error::invalid(format!("target_a = {a} must be negative")));
            }
        }
        Ok(())
    }

    pub fn discretization(&self) -> Result<FPDiscretization> {
        FPDiscretization::new(Grid::new(self.d, self.n, self.l)?, Potential::radial(self.s)?, self.swirl)
    }

    /// Recording times: every `dt`, thinned to at most 201 samples.
    pub fn times(&self) -> Vec<f64> {
        let steps = (self.t_max / self.dt).round().max(1.0) as usize;
        let count = steps.min(200);
        (0..=count).map(|i| self.t_max * i as f64 / count as f64).collect()
    }
}
