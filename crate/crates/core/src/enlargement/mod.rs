//! Transfer of exponential decay from a small weighted space `H` to a larger
//! space `ℋ` through a decomposition `𝒯 = 𝒜 + ℬ`.
//!
//! The hypotheses are checked on finite skeletons of the sets they quantify
//! over ([`sampling`]); the enlarged resolvent is assembled from its factors
//! and compared against the direct inverse ([`factorization`]); decay and
//! resolvent bounds are converted into each other ([`equivalence`]).
//! [`instance`] generates matrices satisfying all hypotheses by construction.

pub mod equivalence;
pub mod factorization;
pub mod hypotheses;
pub mod instance;
pub mod pipeline;
pub mod sampling;
pub mod types;

pub use equivalence::{
    verify_decay_from_resolvent, verify_resolvent_from_decay, ConverseReport, DecayCertificate,
    DecayVerification,
};
pub use factorization::{
    eigen_coincidence, enlarged_resolvent, enlargement_bound_chain, injectivity_check,
    verify_factorization, BoundChain, FactorizationReport, InjectivityDiagnosis, InjectivityReport,
};
pub use hypotheses::{
    check_h1, check_h2, check_h3, check_h4, uniform_times, H1Report, H2Report, H3Report, H4Report,
    HypothesisReport,
};
pub use instance::{generate_instance, GeneratedInstance, InstanceCertificate, InstanceOptions};
pub use pipeline::{run_instance, InstanceRun};
pub use sampling::{XiSampler, YGrid};
pub use types::{EmbeddedSpacePair, SpectralReport, SplitOperator, Verdict, Witness};
