//! Numerical tolerances shared by every module.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Declared floating-point slack. Every field can be overridden by name
/// through [`Tolerances::set`], which is what `--tolerance KEY=VAL` uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative residual allowed for linear solves and resolvents.
    pub solve: f64,
    /// Relative eigen-residual, and the width of the indeterminate band
    /// around decision boundaries (scaled by the operator norm).
    pub eig: f64,
    /// Agreement between the two spectral projector routes.
    pub proj: f64,
    /// Relative agreement between exponential and time-stepping paths.
    pub exp: f64,
    /// Trapezoid nodes on projector contours.
    pub contour_points: usize,
    /// Ceiling for the decomposition norms; anything above fails.
    pub h4_ceiling: f64,
    /// Relative slack on the Laplace-transform bound.
    pub laplace: f64,
    /// Commutation tolerance for certificate projectors (relative).
    pub commute: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solve: 1e-10,
            eig: 1e-9,
            proj: 1e-8,
            exp: 1e-10,
            contour_points: 64,
            h4_ceiling: 1e8,
            laplace: 1e-6,
            commute: 1e-9,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 8] = [
        "solve",
        "eig",
        "proj",
        "exp",
        "contour_points",
        "h4_ceiling",
        "laplace",
        "commute",
    ];

    /// Override one tolerance by name. Unknown keys and non-positive values
    /// are rejected.
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::invalid(format!(
                "tolerance {key} must be positive and finite, got {value}"
            )));
        }
        match key {
            "solve" => self.solve = value,
            "eig" => self.eig = value,
            "proj" => self.proj = value,
            "exp" => self.exp = value,
            "contour_points" => {
                if value.fract() != 0.0 || value < 8.0 {
                    return Err(Error::invalid("contour_points must be an integer >= 8"));
                }
                self.contour_points = value as usize;
            }
            "h4_ceiling" => self.h4_ceiling = value,
            "laplace" => self.laplace = value,
            "commute" => self.commute = value,
            _ => {
                return Err(Error::invalid(format!(
                    "unknown tolerance key {key:?} (known: {})",
                    Self::KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }
}
