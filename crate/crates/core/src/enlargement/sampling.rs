//! Finite skeletons of the unbounded sets the hypotheses quantify over.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Symmetric ordinates for scans along `Re z = a`, truncated at `|y| ≤ y_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YGrid {
    pub points: Vec<f64>,
    pub y_max: f64,
}

impl YGrid {
    /// `0`, a geometric ladder from `y_min` to `y_max` on both sides, and
    /// every ordinate in `extra` (typically imaginary parts of eigenvalues)
    /// with a few neighbours.
    pub fn build(y_min: f64, y_max: f64, per_side: usize, extra: &[f64]) -> Self {
        let mut pts = vec![0.0];
        let per_side = per_side.max(2);
        let ratio = (y_max / y_min).ln() / (per_side - 1) as f64;
        for k in 0..per_side {
            let y = y_min * (ratio * k as f64).exp();
            pts.push(y);
            pts.push(-y);
        }
        for &e in extra {
            let e = e.abs();
            if e > 0.0 && e < y_max {
                for d in [0.0, -1e-2, 1e-2] {
                    let y = e * (1.0 + d);
                    pts.push(y);
                    pts.push(-y);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        Self {
            points: pts,
            y_max,
        }
    }

    /// Default grid for an operator whose frame norm (after shifting by `a`)
    /// is `scale`: the Neumann tail bound past `y_max = 4·max(scale, 1)` is
    /// at most `1/(3·max(scale, 1))`.
    pub fn standard(scale: f64, extra: &[f64]) -> Self {
        let s = scale.max(1.0);
        Self::build(1e-3, 4.0 * s, 40, extra)
    }

    /// Whether the grid is symmetric about zero and contains zero.
    pub fn is_symmetric(&self) -> bool {
        let mut neg: Vec<f64> = self.points.iter().map(|y| -y).collect();
        neg.sort_by(f64::total_cmp);
        neg == self.points && self.points.contains(&0.0)
    }
}

/// Sample layout of the region `Δ_a \ ∪B(ξⱼ, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiSampler {
    /// Points on `Re ξ = a + line_offset`.
    pub line_points: usize,
    pub line_offset: f64,
    /// Points on each circle of radius `circle_factor · r`.
    pub circle_points: usize,
    pub circle_factor: f64,
    /// Rectangle sweep resolution (real × imaginary).
    pub rect: (usize, usize),
}

impl Default for XiSampler {
    fn default() -> Self {
        Self {
            line_points: 41,
            line_offset: 1e-6,
            circle_points: 24,
            circle_factor: 1.05,
            rect: (16, 16),
        }
    }
}

impl XiSampler {
    /// A lighter layout, still with at least 25 points for one ball.
    pub fn light() -> Self {
        Self {
            line_points: 11,
            circle_points: 8,
            rect: (4, 4),
            ..Self::default()
        }
    }

    /// Sample points. The rectangle spans `Re ∈ (a, a + re_extent]` and
    /// `Im ∈ [−im_extent, im_extent]`; the line spans `[−im_extent, im_extent]`.
    pub fn sample(
        &self,
        a: f64,
        r: f64,
        centers: &[Complex64],
        re_extent: f64,
        im_extent: f64,
    ) -> Vec<Complex64> {
        let excluded = |z: Complex64, factor: f64| centers.iter().any(|c| (z - c).norm() < factor * r);
        let mut out = Vec::new();
        let x0 = a + self.line_offset;
        let nl = self.line_points.max(1);
        for k in 0..nl {
            let y = if nl == 1 {
                0.0
            } else {
                -im_extent + 2.0 * im_extent * k as f64 / (nl - 1) as f64
            };
            let z = Complex64::new(x0, y);
            if !excluded(z, 1.0) {
                out.push(z);
            }
        }
        for c in centers {
            for k in 0..self.circle_points {
                let th = 2.0 * PI * (k as f64 + 0.5) / self.circle_points as f64;
                let z = c + Complex64::from_polar(self.circle_factor * r, th);
                if z.re > a && !excluded(z, 1.0) {
                    out.push(z);
                }
            }
        }
        let (nx, ny) = self.rect;
        for i in 1..=nx {
            let x = a + re_extent * i as f64 / nx as f64;
            for j in 0..ny {
                let y = if ny == 1 {
                    0.0
                } else {
                    -im_extent + 2.0 * im_extent * j as f64 / (ny - 1) as f64
                };
                let z = Complex64::new(x, y);
                if !excluded(z, self.circle_factor) {
                    out.push(z);
                }
            }
        }
        out
    }
}
