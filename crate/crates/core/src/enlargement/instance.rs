//! Seeded instances satisfying the localization, resolvent, semigroup and
//! decomposition hypotheses by construction, with their certificates.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sampling::XiSampler;
use super::types::{EmbeddedSpacePair, SplitOperator};
use crate::io::matrix_market;
use crate::operator::{CMatrix, RMatrix, WeightedSpace};
use crate::{Error, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InstanceOptions {
    /// Half-plane abscissa `a < 0`.
    pub a: f64,
    /// Largest real part of the non-isolated spectrum; must be below `a`.
    pub gap: f64,
    /// Shift applied by `𝒜` on its range; `0` gives `𝒜 = 0`.
    pub strength: f64,
    /// Number of isolated eigenvalues: 1 (`ξ₁ = 0`) or 2 (`0` and `a/2`).
    pub discrete: usize,
}

impl Default for InstanceOptions {
    fn default() -> Self {
        Self {
            a: -0.75,
            gap: -1.0,
            strength: 0.5,
            discrete: 1,
        }
    }
}

/// What the generator promises about an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceCertificate {
    pub seed: u64,
    pub n: usize,
    pub options: InstanceOptions,
    pub a: f64,
    pub r: f64,
    pub centers: Vec<Complex64>,
    /// Planted eigenvalues of the full operator.
    pub spectrum: Vec<Complex64>,
    /// Planted eigenvalues of `ℬ`.
    pub spectrum_b: Vec<Complex64>,
    pub rank_a: usize,
    pub embedding_constant: f64,
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub split: SplitOperator,
    pub pair: EmbeddedSpacePair,
    pub certificate: InstanceCertificate,
    /// Planted spectral projectors, one per center.
    pub projectors: Vec<CMatrix>,
}

impl GeneratedInstance {
    /// Admissible ξ samples: the rectangle reaches `10·|gap|` to the right of
    /// the line, the imaginary extent covers the planted spectrum.
    pub fn xi_samples(&self, sampler: &XiSampler) -> Vec<Complex64> {
        let c = &self.certificate;
        let im = c
            .spectrum
            .iter()
            .map(|z| z.im.abs())
            .fold(2.0f64, f64::max)
            * 1.5;
        sampler.sample(c.a, c.r, &c.centers, 10.0 * c.options.gap.abs(), im)
    }

    /// Time grid long enough to resolve the decay at rate `gap`.
    pub fn time_grid(&self) -> Vec<f64> {
        super::hypotheses::uniform_times(15.0 / self.certificate.options.gap.abs(), 61)
    }
}

fn infeasible(msg: impl Into<String>) -> Error {
    Error::Infeasible(msg.into())
}

/// Block of the planted normal form: a real eigenvalue or a conjugate pair.
#[derive(Debug, Clone, Copy)]
enum Block {
    Real(f64),
    Pair(f64, f64),
}

impl Block {
    fn size(self) -> usize {
        match self {
            Block::Real(_) => 1,
            Block::Pair(..) => 2,
        }
    }
}

fn block_diagonal(blocks: &[Block], n: usize, shift: &[f64]) -> RMatrix {
    let mut d = RMatrix::zeros(n, n);
    let mut i = 0;
    for (b, &s) in blocks.iter().zip(shift) {
        match *b {
            Block::Real(x) => d[(i, i)] = x - s,
            Block::Pair(re, im) => {
                d[(i, i)] = re - s;
                d[(i + 1, i + 1)] = re - s;
                d[(i, i + 1)] = im;
                d[(i + 1, i)] = -im;
            }
        }
        i += b.size();
    }
    d
}

fn eigenvalues_of(blocks: &[Block], shift: &[f64]) -> Vec<Complex64> {
    let mut out = Vec::new();
    for (b, &s) in blocks.iter().zip(shift) {
        match *b {
            Block::Real(x) => out.push(Complex64::new(x - s, 0.0)),
            Block::Pair(re, im) => {
                out.push(Complex64::new(re - s, im));
                out.push(Complex64::new(re - s, -im));
            }
        }
    }
    out
}

/// Generate `(𝒯 = 𝒜 + ℬ, H ⊂ ℋ)` from a planted spectrum `V D V⁻¹`.
///
/// `D` holds the isolated eigenvalues and real blocks with real parts in
/// `[gap − 2, gap]`. `𝒜 = V S V⁻¹` where `S` shifts a random nonempty set of
/// the stable blocks by `strength`, so `ℬ` keeps the isolated eigenvalues and
/// moves the rest further left. Ambient weights lie in `[0.5, 2]`; the small
/// space multiplies them by factors in `[1, 10]`, so `c_J ≤ 1`.
///
/// `(seed, n) = (1, 2)` with one isolated eigenvalue uses `V = Id` and unit
/// weights: `𝒯 = diag(0, gap)`, `𝒜 = diag(0, strength)`.
pub fn generate_instance(seed: u64, n: usize, opts: InstanceOptions) -> Result<GeneratedInstance> {
    let InstanceOptions {
        a,
        gap,
        strength,
        discrete,
    } = opts;
    if !(a.is_finite() && gap.is_finite() && strength.is_finite()) {
        return Err(infeasible("parameters must be finite"));
    }
    if !(gap < a && a < 0.0) {
        return Err(infeasible(format!("need gap < a < 0, got gap={gap}, a={a}")));
    }
    if strength < 0.0 {
        return Err(infeasible(format!("strength {strength} must be nonnegative")));
    }
    if !(1..=2).contains(&discrete) || n < discrete {
        return Err(infeasible(format!(
            "need 1 or 2 isolated eigenvalues and n >= that, got {discrete} with n={n}"
        )));
    }

    let pinned = seed == 1 && n == 2 && discrete == 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (centers, r) = if discrete == 1 {
        (vec![0.0], a.abs() / 3.0)
    } else {
        (vec![0.0, 0.5 * a], a.abs() / 6.0)
    };

    let mut blocks: Vec<Block> = centers.iter().map(|&c| Block::Real(c)).collect();
    let mut left = n - discrete;
    let mut first = true;
    while left > 0 {
        let re = if first { gap } else { rng.gen_range(gap - 2.0..=gap) };
        first = false;
        if left >= 2 && !pinned && rng.gen_bool(0.4) {
            blocks.push(Block::Pair(re, rng.gen_range(0.3..3.0)));
            left -= 2;
        } else {
            blocks.push(Block::Real(re));
            left -= 1;
        }
    }

    let mut shift = vec![0.0; blocks.len()];
    let stable = discrete..blocks.len();
    if !stable.is_empty() {
        let mut any = false;
        for s in shift[stable.clone()].iter_mut() {
            if pinned || rng.gen_bool(0.5) {
                *s = strength;
                any = true;
            }
        }
        if !any {
            let k = rng.gen_range(stable);
            shift[k] = strength;
        }
    }
    let rank_a = if strength == 0.0 {
        0
    } else {
        blocks
            .iter()
            .zip(&shift)
            .filter(|(_, &s)| s != 0.0)
            .map(|(b, _)| b.size())
            .sum()
    };

    let (v, v_inv) = if pinned {
        (RMatrix::identity(n, n), RMatrix::identity(n, n))
    } else {
        loop {
            let g = RMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let v = RMatrix::identity(n, n) + g * (0.3 / (n as f64).sqrt());
            let sv = v.singular_values();
            let cond = sv.max() / sv.min();
            if cond < 1e3 {
                if let Some(inv) = v.clone().try_inverse() {
                    break (v, inv);
                }
            }
        }
    };

    let zero = vec![0.0; blocks.len()];
    let d = block_diagonal(&blocks, n, &zero);
    let d_b = block_diagonal(&blocks, n, &shift);
    let t = &v * d * &v_inv;
    let part_a = &v * (block_diagonal(&blocks, n, &zero) - &d_b) * &v_inv;
    let split = SplitOperator::from_full(&t, part_a)?;

    let projectors = (0..discrete)
        .map(|j| {
            let mut e = RMatrix::zeros(n, n);
            e[(j, j)] = 1.0;
            (&v * e * &v_inv).map(|x| Complex64::new(x, 0.0))
        })
        .collect();

    let (w_amb, w_small): (Vec<f64>, Vec<f64>) = if pinned {
        (vec![1.0; n], vec![1.0; n])
    } else {
        (0..n)
            .map(|_| {
                let w = rng.gen_range(0.5..2.0);
                (w, w * rng.gen_range(1.0..10.0))
            })
            .unzip()
    };
    let pair = EmbeddedSpacePair::new(
        WeightedSpace::with_weights(w_amb)?,
        WeightedSpace::with_weights(w_small)?,
    )?;

    Ok(GeneratedInstance {
        certificate: InstanceCertificate {
            seed,
            n,
            options: opts,
            a,
            r,
            centers: centers.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
            spectrum: eigenvalues_of(&blocks, &zero),
            spectrum_b: eigenvalues_of(&blocks, &shift),
            rank_a,
            embedding_constant: pair.embedding_constant(),
        },
        split,
        pair,
        projectors,
    })
}

/// Manifest tying an instance's JSON description to its Matrix Market files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceManifest {
    pub schema_version: u32,
    pub certificate: InstanceCertificate,
    pub weights_ambient: Vec<f64>,
    pub weights_small: Vec<f64>,
    pub tolerances: Tolerances,
    pub full: String,
    pub part_a: String,
    pub part_b: String,
    pub projectors: Vec<String>,
}

impl InstanceManifest {
    pub const SCHEMA_VERSION: u32 = 1;
}

/// Write `manifest.json` plus one `.mtx` file per operator into `dir`.
pub fn write_instance(dir: &Path, inst: &GeneratedInstance, tol: &Tolerances) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    matrix_market::save_real(dir.join("full.mtx"), inst.split.full())?;
    matrix_market::save_real(dir.join("part_a.mtx"), inst.split.part_a())?;
    matrix_market::save_real(dir.join("part_b.mtx"), inst.split.part_b())?;
    let mut proj = Vec::new();
    for (j, p) in inst.projectors.iter().enumerate() {
        let name = format!("projector_{j}.mtx");
        matrix_market::save_complex(dir.join(&name), p)?;
        proj.push(name);
    }
    let manifest = InstanceManifest {
        schema_version: InstanceManifest::SCHEMA_VERSION,
        certificate: inst.certificate.clone(),
        weights_ambient: inst.pair.ambient().weights().to_vec(),
        weights_small: inst.pair.small().weights().to_vec(),
        tolerances: *tol,
        full: "full.mtx".into(),
        part_a: "part_a.mtx".into(),
        part_b: "part_b.mtx".into(),
        projectors: proj,
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(path)
}

/// Read an instance back from its manifest.
pub fn load_instance(manifest_path: &Path) -> Result<(GeneratedInstance, Tolerances)> {
    let text = std::fs::read_to_string(manifest_path)?;
    let m: InstanceManifest = serde_json::from_str(&text)?;
    if m.schema_version != InstanceManifest::SCHEMA_VERSION {
        return Err(Error::invalid(format!(
            "unsupported instance schema version {}",
            m.schema_version
        )));
    }
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let part_a = matrix_market::load(dir.join(&m.part_a))?.into_real()?;
    let part_b = matrix_market::load(dir.join(&m.part_b))?.into_real()?;
    let split = SplitOperator::new(part_a, part_b)?;
    let pair = EmbeddedSpacePair::new(
        WeightedSpace::with_weights(m.weights_ambient)?,
        WeightedSpace::with_weights(m.weights_small)?,
    )?;
    let projectors = m
        .projectors
        .iter()
        .map(|p| Ok(matrix_market::load(dir.join(p))?.into_complex()))
        .collect::<Result<Vec<DMatrix<Complex64>>>>()?;
    Ok((
        GeneratedInstance {
            split,
            pair,
            certificate: m.certificate,
            projectors,
        },
        m.tolerances,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::eigen_decompose;

    #[test]
    fn pinned_instance_is_the_diagonal_one() {
        let inst = generate_instance(1, 2, InstanceOptions::default()).unwrap();
        let t = inst.split.full();
        assert_eq!(t, &nalgebra::dmatrix![0.0, 0.0; 0.0, -1.0]);
        assert_eq!(inst.split.part_a(), &nalgebra::dmatrix![0.0, 0.0; 0.0, 0.5]);
        assert_eq!(inst.split.part_b(), &nalgebra::dmatrix![0.0, 0.0; 0.0, -1.5]);
        assert_eq!(inst.certificate.r, 0.25);
        assert_eq!(inst.pair.embedding_constant(), 1.0);
    }

    #[test]
    fn zero_strength_gives_b_equal_t() {
        let opts = InstanceOptions {
            strength: 0.0,
            ..Default::default()
        };
        let inst = generate_instance(7, 6, opts).unwrap();
        assert!(inst.split.part_a().iter().all(|&x| x == 0.0));
        assert_eq!(inst.split.part_b(), inst.split.full());
        assert_eq!(inst.certificate.rank_a, 0);
    }

    #[test]
    fn planted_spectrum_is_recovered() {
        for seed in 0..5 {
            let inst = generate_instance(seed, 8, InstanceOptions::default()).unwrap();
            let eig = eigen_decompose(inst.split.full(), 1e-9).unwrap();
            for z in &inst.certificate.spectrum {
                let d = eig.values.iter().map(|w| (w - z).norm()).fold(f64::INFINITY, f64::min);
                assert!(d < 1e-8, "seed {seed}: {z} missing ({d})");
            }
            let eig_b = eigen_decompose(inst.split.part_b(), 1e-9).unwrap();
            assert!(eig_b.values.iter().all(|z| z.re <= inst.certificate.a || z.norm() < 1e-8));
        }
    }

    #[test]
    fn infeasible_parameters_are_rejected() {
        let bad = [
            InstanceOptions { gap: -0.5, ..Default::default() },
            InstanceOptions { a: 0.1, ..Default::default() },
            InstanceOptions { strength: -1.0, ..Default::default() },
            InstanceOptions { discrete: 3, ..Default::default() },
        ];
        for o in bad {
            assert!(matches!(generate_instance(3, 6, o), Err(Error::Infeasible(_))), "{o:?}");
        }
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let inst = generate_instance(4, 5, InstanceOptions { discrete: 2, ..Default::default() }).unwrap();
        let path = write_instance(dir.path(), &inst, &Tolerances::default()).unwrap();
        let (back, tol) = load_instance(&path).unwrap();
        assert_eq!(tol, Tolerances::default());
        assert_eq!(back.certificate, inst.certificate);
        assert!((back.split.full() - inst.split.full()).amax() < 1e-15);
        assert_eq!(back.projectors.len(), 2);
    }
}
