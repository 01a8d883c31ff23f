//! Finite-volume Fokker–Planck operators with a confining potential and
//! their decay in enlarged weighted spaces.

pub mod decomposition;
pub mod discretization;
pub mod experiment;
pub mod model;
pub mod problem;
pub mod scan;
pub mod sparse;
pub mod spectrum;

pub use decomposition::{find_decomposition, Candidate, DecompositionSearch, SearchBox};
pub use discretization::{assemble_skew_part, assemble_symmetric_part, FPDiscretization, Grid, StructureReport};
pub use experiment::{decay_experiment, uniform_decay_envelope, DecayExperiment, UniformEnvelope};
pub use model::{EnlargedWeight, Potential, SwirlField, SwirlProfile, WeightKind};
pub use problem::{FpProblem, InitialData};
pub use scan::{resolvent_scan_fp, ResolventScan};
pub use sparse::{SparseGenerator, SparseOperator};
pub use spectrum::{poincare_mode, spectral_gap_h, SpectralGap};
