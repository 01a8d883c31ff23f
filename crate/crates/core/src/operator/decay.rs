use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Certified exponential envelope `norm(t) ≤ C e^{λt}` over sampled times.
/// `C > 1` is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub prefactor: f64,
    pub rate: f64,
    /// Time interval the regression used.
    pub fit_window: (f64, f64),
    /// Max absolute deviation of `ln norm` from the fitted line in the window.
    pub residual: f64,
}

impl DecayFit {
    pub fn bound(&self, t: f64) -> f64 {
        self.prefactor * (self.rate * t).exp()
    }

    /// Whether `norms[i] ≤ C e^{λ tᵢ} (1 + rel_tol)` at every sample.
    pub fn holds(&self, times: &[f64], norms: &[f64], rel_tol: f64) -> bool {
        times
            .iter()
            .zip(norms)
            .all(|(&t, &n)| n <= self.bound(t) * (1.0 + rel_tol))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Fraction of trailing samples used for the regression.
    pub tail_fraction: f64,
    /// Explicit regression window; overrides `tail_fraction`.
    pub window: Option<(f64, f64)>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tail_fraction: 0.5,
            window: None,
        }
    }
}

fn validate(times: &[f64], norms: &[f64]) -> Result<()> {
    if times.len() != norms.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            actual: norms.len(),
        });
    }
    if times.len() < 4 {
        return Err(Error::invalid(format!(
            "decay fit needs at least 4 samples, got {}",
            times.len()
        )));
    }
    if norms.iter().any(|n| !n.is_finite() || *n < 0.0) {
        return Err(Error::invalid("norms must be finite and nonnegative"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("times must be strictly increasing"));
    }
    Ok(())
}

fn floor_of(norms: &[f64]) -> Result<f64> {
    if norms[0] <= 0.0 {
        return Err(Error::InsufficientSignal("initial norm is zero".into()));
    }
    Ok(1e3 * f64::EPSILON * norms[0])
}

/// Least-squares line through `(t, ln norm)` on the tail window, then `C`
/// is raised just enough for the envelope to hold at every sample.
/// Samples under `10³ ε norms[0]` are excluded from the regression.
pub fn fit_exponential_decay(times: &[f64], norms: &[f64], opts: FitOptions) -> Result<DecayFit> {
    validate(times, norms)?;
    let floor = floor_of(norms)?;
    let n = times.len();
    let in_window: Vec<usize> = match opts.window {
        Some((lo, hi)) => (0..n).filter(|&i| times[i] >= lo && times[i] <= hi).collect(),
        None => {
            let frac = opts.tail_fraction.clamp(0.0, 1.0);
            let start = ((1.0 - frac) * n as f64).floor() as usize;
            (start.min(n - 2)..n).collect()
        }
    };
    let usable: Vec<usize> = in_window.into_iter().filter(|&i| norms[i] > floor).collect();
    if usable.len() < 2 {
        return Err(Error::InsufficientSignal(format!(
            "{} samples above the floor {floor:.3e} in the fit window",
            usable.len()
        )));
    }

    let m = usable.len() as f64;
    let tm = usable.iter().map(|&i| times[i]).sum::<f64>() / m;
    let ym = usable.iter().map(|&i| norms[i].ln()).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &i in &usable {
        let dx = times[i] - tm;
        sxy += dx * (norms[i].ln() - ym);
        sxx += dx * dx;
    }
    let rate = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let log_c = ym - rate * tm;
    let residual = usable
        .iter()
        .map(|&i| (norms[i].ln() - (log_c + rate * times[i])).abs())
        .fold(0.0, f64::max);

    let needed = minimal_prefactor(times, norms, rate);
    Ok(DecayFit {
        prefactor: log_c.exp().max(needed),
        rate,
        fit_window: (times[usable[0]], times[*usable.last().unwrap()]),
        residual,
    })
}

/// Envelope at a prescribed rate with the smallest prefactor valid at
/// every sample.
pub fn certify_rate(times: &[f64], norms: &[f64], rate: f64) -> Result<DecayFit> {
    validate(times, norms)?;
    let floor = floor_of(norms)?;
    let prefactor = minimal_prefactor(times, norms, rate);
    let residual = times
        .iter()
        .zip(norms)
        .filter(|(_, &n)| n > floor)
        .map(|(&t, &n)| (prefactor.ln() + rate * t - n.ln()).abs())
        .fold(0.0, f64::max);
    Ok(DecayFit {
        prefactor,
        rate,
        fit_window: (times[0], times[times.len() - 1]),
        residual,
    })
}

fn minimal_prefactor(times: &[f64], norms: &[f64], rate: f64) -> f64 {
    times
        .iter()
        .zip(norms)
        .map(|(&t, &n)| n * (-rate * t).exp())
        .fold(0.0, f64::max)
}
