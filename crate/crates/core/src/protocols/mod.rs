//! Extraction, distillation and composition protocols.

pub mod dsec;
pub mod extraction;
pub mod hash;

pub use dsec::{dsec, dsec_cq, DsecMethod, DsecResult};
pub use extraction::*;
pub use hash::{restricted_growth_hashes, sampled_universal_hashes, HashFunction};
pub mod distill;
pub use distill::{build_assisted_distiller, build_distiller_from_extraction, distillation_error, DistillerReport};
pub mod compose;
pub use compose::{compose_and_certify, Composite, Instrument, Party, Round, RoundKind, RoundStructure, WitnessedChannel};
pub mod hashing;
pub use hashing::{hashing_bound_check, HashingBoundCheck};
