//! Space-enlargement toolkit for exponential decay estimates of semigroups.
//!
//! Everything here works on finite matrix surrogates of unbounded generators:
//!
//! * [`operator`] is the weighted dense linear algebra substrate (norms in
//!   weighted spaces, resolvents, spectra, spectral projectors, matrix
//!   semigroups, decay fitting).
//! * [`enlargement`] checks the localization / resolvent / semigroup /
//!   decomposition hypotheses, builds the enlarged resolvent
//!   `U(ξ) = ℬ(ξ)⁻¹ − R(ξ)𝒜ℬ(ξ)⁻¹` and certifies decay in the larger space.
//! * [`fokker_planck`] discretizes `∂ₜf = div(∇f + Ef)` in weighted spaces and
//!   runs the spectral-gap and decay experiments.
//!
//! Scans over ξ-grids, seeds and parameter boxes go through [`par`], which
//! uses rayon when the `parallel` feature is on and a plain iterator otherwise.

pub mod config;
pub mod enlargement;
pub mod error;
pub mod fokker_planck;
pub mod io;
pub mod operator;
pub mod par;

pub use config::Tolerances;
pub use error::{Error, Result};

pub use num_complex::Complex64;
