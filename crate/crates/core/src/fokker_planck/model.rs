//! Potential, enlarged weight and swirl field.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Confining potential `U(x) = (1 + |x|²)^{s/2}`, or the flat surrogate
/// `U ≡ 1` used to compare against the Neumann Laplacian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Potential {
    Radial { s: f64 },
    Flat,
}

impl Potential {
    pub fn radial(s: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 1.0) {
            return Err(Error::invalid(format!("potential exponent s = {s} must be >= 1")));
        }
        Ok(Potential::Radial { s })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Potential::Radial { s } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                (1.0 + r2).powf(0.5 * s)
            }
            Potential::Flat => 1.0,
        }
    }

    /// `∇U(x) = s·x·(1 + |x|²)^{s/2 − 1}`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            Potential::Radial { s } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let f = s * (1.0 + r2).powf(0.5 * s - 1.0);
                x.iter().map(|v| f * v).collect()
            }
            Potential::Flat => vec![0.0; x.len()],
        }
    }

    /// `U(0)`; the truncation guard compares against it.
    pub fn at_origin(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightKind {
    Polynomial,
    StretchedExponential,
}

/// `m⁻¹(x) = θ(U(x))` with `θ(u) = (1 + u²)^{k/2}` or `e^{(1 + u²)^{k/2}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnlargedWeight {
    pub kind: WeightKind,
    pub k: f64,
}

impl EnlargedWeight {
    /// Checks `k > d` (polynomial) or `k ∈ (0, 1)` (stretched exponential).
    pub fn new(kind: WeightKind, k: f64, d: usize) -> Result<Self> {
        let w = Self { kind, k };
        w.validate(d)?;
        Ok(w)
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        let ok = match self.kind {
            WeightKind::Polynomial => self.k.is_finite() && self.k > d as f64,
            WeightKind::StretchedExponential => self.k > 0.0 && self.k < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(match self.kind {
                WeightKind::Polynomial => {
                    format!("polynomial weight needs k > d = {d}, got k = {}", self.k)
                }
                WeightKind::StretchedExponential => {
                    format!("stretched-exponential weight needs k in (0, 1), got k = {}", self.k)
                }
            }))
        }
    }

    pub fn theta(&self, u: f64) -> f64 {
        let base = (1.0 + u * u).powf(0.5 * self.k);
        match self.kind {
            WeightKind::Polynomial => base,
            WeightKind::StretchedExponential => base.exp(),
        }
    }
}

/// Amplitude profile `φ` of the swirl field, as a function of `u = U(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SwirlProfile {
    /// `φ ≡ 0`.
    None,
    /// `φ ≡ 1`.
    Constant,
    /// `φ(u) = 1/(1 + u)`.
    InverseOnePlus,
    /// `φ(u) = u`; unbounded, accepted by the parser only to be rejected.
    Linear,
}

/// `F = amplitude · φ(U) ∇⊥U` with `∇⊥U = (−∂₂U, ∂₁U)`; zero in dimension 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwirlField {
    pub phi: SwirlProfile,
    pub amplitude: f64,
}

impl Default for SwirlField {
    fn default() -> Self {
        Self::none()
    }
}

impl SwirlField {
    pub fn none() -> Self {
        Self {
            phi: SwirlProfile::None,
            amplitude: 0.0,
        }
    }

    pub fn new(phi: SwirlProfile, amplitude: f64) -> Result<Self> {
        let f = Self { phi, amplitude };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.amplitude.is_finite() {
            return Err(Error::invalid("swirl amplitude must be finite"));
        }
        if self.phi == SwirlProfile::Linear && self.amplitude != 0.0 {
            return Err(Error::invalid(
                "swirl profile phi(u) = u is unbounded; the field must satisfy |F| <= C(1 + |grad U|)",
            ));
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.amplitude == 0.0 || self.phi == SwirlProfile::None
    }

    pub fn phi(&self, u: f64) -> f64 {
        self.amplitude
            * match self.phi {
                SwirlProfile::None => 0.0,
                SwirlProfile::Constant => 1.0,
                SwirlProfile::InverseOnePlus => 1.0 / (1.0 + u),
                SwirlProfile::Linear => u,
            }
    }

    /// `sup_{u ≥ 1} |φ(u)|`, the constant in `|F| ≤ C(1 + |∇U|)`.
    pub fn bound(&self) -> f64 {
        self.amplitude.abs()
            * match self.phi {
                SwirlProfile::None => 0.0,
                SwirlProfile::Constant => 1.0,
                SwirlProfile::InverseOnePlus => 0.5,
                SwirlProfile::Linear => f64::INFINITY,
            }
    }

    /// `F(x)` in dimension 2.
    pub fn field(&self, potential: &Potential, x: [f64; 2]) -> [f64; 2] {
        let g = potential.gradient(&x);
        let p = self.phi(potential.value(&x));
        [-p * g[1], p * g[0]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn potential_values() {
        let u = Potential::radial(2.0).unwrap();
        assert_eq!(u.value(&[0.0]), 1.0);
        assert_relative_eq!(u.value(&[3.0]), 10.0, epsilon = 1e-12);
        assert_relative_eq!(u.gradient(&[3.0])[0], 6.0, epsilon = 1e-12);
        assert!(Potential::radial(0.5).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let u = Potential::radial(3.0).unwrap();
        let x = [0.7, -1.3];
        let g = u.gradient(&x);
        let e = 1e-6;
        for i in 0..2 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += e;
            xm[i] -= e;
            let fd = (u.value(&xp) - u.value(&xm)) / (2.0 * e);
            assert_relative_eq!(g[i], fd, epsilon = 1e-7);
        }
    }

    #[test]
    fn weight_hypotheses() {
        assert!(EnlargedWeight::new(WeightKind::Polynomial, 3.0, 1).is_ok());
        assert!(EnlargedWeight::new(WeightKind::Polynomial, 0.5, 1).is_err());
        assert!(EnlargedWeight::new(WeightKind::Polynomial, 2.0, 2).is_err());
        assert!(EnlargedWeight::new(WeightKind::StretchedExponential, 0.5, 2).is_ok());
        assert!(EnlargedWeight::new(WeightKind::StretchedExponential, 1.0, 1).is_err());
        let w = EnlargedWeight::new(WeightKind::Polynomial, 3.0, 1).unwrap();
        assert_relative_eq!(w.theta(1.0), 2f64.powf(1.5), epsilon = 1e-14);
    }

    #[test]
    fn swirl_is_orthogonal_to_gradient() {
        let u = Potential::radial(2.0).unwrap();
        let f = SwirlField::new(SwirlProfile::InverseOnePlus, 1.0).unwrap();
        let x = [0.4, -2.0];
        let v = f.field(&u, x);
        let g = u.gradient(&x);
        assert!((v[0] * g[0] + v[1] * g[1]).abs() < 1e-14);
        let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        assert!(norm <= f.bound() * (1.0 + gn));
        assert!(SwirlField::new(SwirlProfile::Linear, 1.0).is_err());
    }
}
