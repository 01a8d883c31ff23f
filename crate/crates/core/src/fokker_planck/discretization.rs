//! Finite-volume discretization of `∂ₜf = div(∇f + ∇U f + F f)` on
//! `[−L, L]^d` with zero-flux boundaries.
//!
//! Unknowns live at cell centres `xᵢ = −L + (i + ½)h`, `h = 2L/N`. The
//! symmetric part acts on `f/μ` through face values `μ_{i+½} = sqrt(μᵢμᵢ₊₁)`,
//! so `μ` is an exact discrete equilibrium and the operator is symmetric in
//! `L²(μ⁻¹)`. The skew part uses face fluxes of `Fμ` obtained from a stream
//! function, which makes them exactly divergence free, times the centred
//! average of `f/μ`. Every face contributes a pair of opposite entries to
//! each column, so column sums vanish and mass is conserved.

use nalgebra::DVector;

use super::model::{EnlargedWeight, Potential, SwirlField};
use super::sparse::SparseOperator;
use crate::operator::WeightedSpace;
use crate::{Error, Result};

/// Largest allowed `μ(±L)/μ(0)`.
pub const TRUNCATION_LIMIT: f64 = 1e-12;

/// Uniform cell-centred grid on `[−L, L]^d`, `d ∈ {1, 2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub d: usize,
    pub n: usize,
    pub l: f64,
    pub h: f64,
    pub axis: Vec<f64>,
}

impl Grid {
    pub fn new(d: usize, n: usize, l: f64) -> Result<Self> {
        if !(1..=2).contains(&d) {
            return Err(Error::invalid(format!("dimension {d} not supported (1 or 2)")));
        }
        if n < 3 {
            return Err(Error::invalid(format!("need at least 3 cells per axis, got {n}")));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(Error::invalid(format!("half-width L = {l} must be positive")));
        }
        let h = 2.0 * l / n as f64;
        let axis = (0..n).map(|i| -l + (i as f64 + 0.5) * h).collect();
        Ok(Self { d, n, l, h, axis })
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.d as i32)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i + self.n * j
    }

    pub fn point(&self, p: usize) -> Vec<f64> {
        match self.d {
            1 => vec![self.axis[p]],
            _ => vec![self.axis[p % self.n], self.axis[p / self.n]],
        }
    }

    /// Neighbour pairs `(p, q, axis)` across every interior face, `q` on the
    /// positive side of `p`.
    pub fn faces(&self) -> Vec<(usize, usize, usize)> {
        let n = self.n;
        let mut out = Vec::new();
        match self.d {
            1 => out.extend((0..n - 1).map(|i| (i, i + 1, 0))),
            _ => {
                for j in 0..n {
                    for i in 0..n {
                        if i + 1 < n {
                            out.push((self.index(i, j), self.index(i + 1, j), 0));
                        }
                        if j + 1 < n {
                            out.push((self.index(i, j), self.index(i, j + 1), 1));
                        }
                    }
                }
            }
        }
        out
    }
}

/// `∫_{u1}^{u2} φ(v) e^{c − v} dv` by composite 8-point Gauss–Legendre.
fn stream_increment(swirl: &SwirlField, u1: f64, u2: f64, c: f64) -> f64 {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let panels = ((u2 - u1).abs() / 0.25).ceil().max(1.0) as usize;
    let width = (u2 - u1) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = u1 + (k as f64 + 0.5) * width;
        let half = 0.5 * width;
        for (x, w) in X.iter().zip(W) {
            for v in [mid - half * x, mid + half * x] {
                total += w * half * swirl.phi(v) * (c - v).exp();
            }
        }
    }
    total
}

/// Assembled generator with its splitting and equilibrium.
#[derive(Debug, Clone)]
pub struct FPDiscretization {
    pub grid: Grid,
    pub potential: Potential,
    pub swirl: SwirlField,
    /// `U` at the nodes.
    pub u: Vec<f64>,
    /// Equilibrium `μ_h`, normalized so that `Σ μᵢ h^d = 1`.
    pub mu: Vec<f64>,
    pub symmetric: SparseOperator,
    pub skew: SparseOperator,
    pub generator: SparseOperator,
    /// Boundary faces carry no flux (always true here).
    pub zero_flux_boundary: bool,
}

/// Check `μ(±L) < 1e−12 μ(0)`.
pub fn truncation_guard(potential: &Potential, l: f64) -> Result<()> {
    if let Potential::Flat = potential {
        return Ok(());
    }
    let ratio = (potential.at_origin() - potential.value(&[l])).exp();
    if ratio >= TRUNCATION_LIMIT {
        return Err(Error::DomainTooSmall {
            ratio,
            limit: TRUNCATION_LIMIT,
        });
    }
    Ok(())
}

/// Symmetric part `div(∇f + ∇U f)` in divergence form on `f/μ`.
pub fn assemble_symmetric_part(grid: &Grid, potential: &Potential) -> Result<SparseOperator> {
    truncation_guard(potential, grid.l)?;
    let u: Vec<f64> = (0..grid.len()).map(|p| potential.value(&grid.point(p))).collect();
    Ok(symmetric_from_values(grid, &u))
}

fn symmetric_from_values(grid: &Grid, u: &[f64]) -> SparseOperator {
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let mut trip = Vec::with_capacity(4 * grid.len());
    for (p, q, _) in grid.faces() {
        // μ_f/μ_q = exp((U_q − U_p)/2), μ_f/μ_p = exp((U_p − U_q)/2)
        let to_q = (0.5 * (u[q] - u[p])).exp() * inv_h2;
        let to_p = (0.5 * (u[p] - u[q])).exp() * inv_h2;
        trip.push((p, q, to_q));
        trip.push((q, q, -to_q));
        trip.push((q, p, to_p));
        trip.push((p, p, -to_p));
    }
    SparseOperator::from_triplets(grid.len(), trip)
}

/// Skew part `div(F f)`; the zero operator in dimension 1 or for `F ≡ 0`.
pub fn assemble_skew_part(grid: &Grid, potential: &Potential, swirl: &SwirlField) -> Result<SparseOperator> {
    swirl.validate()?;
    if grid.d == 1 || swirl.is_zero() {
        return Ok(SparseOperator::zeros(grid.len()));
    }
    let h = grid.h;
    let inv = 1.0 / (2.0 * h * h);
    let uval = |x: f64, y: f64| potential.value(&[x, y]);
    let u: Vec<f64> = (0..grid.len()).map(|p| potential.value(&grid.point(p))).collect();
    let mut trip = Vec::with_capacity(4 * grid.len());
    for (p, q, axis) in grid.faces() {
        let xp = grid.point(p);
        // endpoints of the face, ordered so the outward flux from p is
        // ψ(end) − ψ(start) up to sign
        let (start, end, sign) = if axis == 0 {
            let xf = xp[0] + 0.5 * h;
            (uval(xf, xp[1] + 0.5 * h), uval(xf, xp[1] - 0.5 * h), 1.0)
        } else {
            let yf = xp[1] + 0.5 * h;
            (uval(xp[0] - 0.5 * h, yf), uval(xp[0] + 0.5 * h, yf), 1.0)
        };
        // outward flux of Fμ from p, scaled by 1/μ of the column node
        let flux_over_mu_p = -sign * stream_increment(swirl, end, start, u[p]);
        let flux_over_mu_q = -sign * stream_increment(swirl, end, start, u[q]);
        trip.push((p, p, flux_over_mu_p * inv));
        trip.push((q, p, -flux_over_mu_p * inv));
        trip.push((p, q, flux_over_mu_q * inv));
        trip.push((q, q, -flux_over_mu_q * inv));
    }
    Ok(SparseOperator::from_triplets(grid.len(), trip))
}

impl FPDiscretization {
    pub fn new(grid: Grid, potential: Potential, swirl: SwirlField) -> Result<Self> {
        let symmetric = assemble_symmetric_part(&grid, &potential)?;
        let skew = assemble_skew_part(&grid, &potential, &swirl)?;
        let u: Vec<f64> = (0..grid.len()).map(|p| potential.value(&grid.point(p))).collect();
        let umin = u.iter().copied().fold(f64::INFINITY, f64::min);
        let raw: Vec<f64> = u.iter().map(|v| (umin - v).exp()).collect();
        let z: f64 = raw.iter().sum::<f64>() * grid.cell_volume();
        let mu = raw.iter().map(|m| m / z).collect();
        let generator = symmetric.add(&skew);
        Ok(Self {
            grid,
            potential,
            swirl,
            u,
            mu,
            symmetric,
            skew,
            generator,
            zero_flux_boundary: true,
        })
    }

    pub fn dim(&self) -> usize {
        self.grid.len()
    }

    fn grid_points(&self) -> Vec<f64> {
        match self.grid.d {
            1 => self.grid.axis.clone(),
            _ => (0..self.dim()).map(|p| p as f64).collect(),
        }
    }

    /// `H = L²(μ⁻¹)`.
    pub fn small_space(&self) -> Result<WeightedSpace> {
        WeightedSpace::new(
            self.grid_points(),
            self.mu.iter().map(|m| 1.0 / m).collect(),
            self.grid.cell_volume(),
        )
    }

    /// `ℋ = L²(θ(U))`.
    pub fn ambient_space(&self, weight: &EnlargedWeight) -> Result<WeightedSpace> {
        weight.validate(self.grid.d)?;
        WeightedSpace::new(
            self.grid_points(),
            self.u.iter().map(|&u| weight.theta(u)).collect(),
            self.grid.cell_volume(),
        )
    }

    /// `Σ fᵢ h^d`.
    pub fn mass(&self, f: &DVector<f64>) -> f64 {
        f.sum() * self.grid.cell_volume()
    }

    pub fn equilibrium(&self) -> DVector<f64> {
        DVector::from_vec(self.mu.clone())
    }

    /// `f − ⟨f⟩ μ_h`.
    pub fn deviation(&self, f: &DVector<f64>) -> DVector<f64> {
        f - self.equilibrium() * self.mass(f)
    }

    /// `|⟨𝒯ᵃˢf, f⟩_ℋ| / ‖f‖²_ℋ`.
    pub fn skew_ratio(&self, f: &DVector<f64>, ambient: &WeightedSpace) -> Result<f64> {
        let tf = self.skew.apply(f);
        Ok(ambient.inner(&tf, f)?.abs() / ambient.norm(f)?.powi(2))
    }

    /// `f` sampled at the nodes.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> DVector<f64> {
        DVector::from_fn(self.dim(), |p, _| f(&self.grid.point(p)))
    }
}

/// Defects of the structural identities, each relative to the natural
/// scale of the quantity.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StructureReport {
    /// `max_j |Σᵢ 𝒯ᵢⱼ| / max|𝒯ᵢⱼ|`: mass conservation.
    pub mass_defect: f64,
    /// `‖𝒯ˢμ‖∞ / (max|𝒯ˢᵢⱼ| ‖μ‖∞)`.
    pub null_defect: f64,
    /// Same for the skew part (zero when it vanishes).
    pub skew_null_defect: f64,
    /// `max|Sᵢⱼ − Sⱼᵢ| / max|Sᵢⱼ|` for `S = μ^{−1/2} 𝒯ˢ μ^{1/2}`.
    pub symmetry_defect: f64,
}

impl FPDiscretization {
    pub fn structure(&self) -> StructureReport {
        let scale = self.generator.max_abs();
        let mass_defect = self.generator.column_sums().iter().fold(0.0f64, |m, c| m.max(c.abs())) / scale;
        let mu = self.equilibrium();
        let null_defect = self.symmetric.apply(&mu).amax() / (self.symmetric.max_abs() * mu.amax());
        let skew_null_defect = if self.skew.nnz() == 0 {
            0.0
        } else {
            self.skew.apply(&mu).amax() / (self.skew.max_abs() * mu.amax())
        };
        let root: Vec<f64> = self.mu.iter().map(|m| m.sqrt()).collect();
        let inv: Vec<f64> = root.iter().map(|r| 1.0 / r).collect();
        let s = self.symmetric.scaled(&inv, &root);
        let symmetry_defect = s
            .triplets()
            .map(|(i, j, v)| (v - s.get(j, i)).abs())
            .fold(0.0, f64::max)
            / s.max_abs();
        StructureReport {
            mass_defect,
            null_defect,
            skew_null_defect,
            symmetry_defect,
        }
    }
}
