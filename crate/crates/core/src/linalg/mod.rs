//! Dense complex linear algebra, tensor layouts, states and fidelities.

pub mod fidelity;
pub mod layout;
pub mod matrix;
pub mod random;
pub mod spectral;
pub mod state;

pub use fidelity::{cq_fidelity, distance_from_fidelity, fidelity, fidelity_psd, purified_distance, purified_distance_psd};
pub use layout::{dephase_operator, embed_operator, partial_trace, permute_operator, permute_vector, SystemLayout};
pub use matrix::{kron, kron_all, kron_vec, vec_inner, vec_norm, ComplexMatrix, C64, MAX_DIM, ONE, ZERO};
pub use spectral::{eigh, eigvalsh, sqrt_psd, svd, trace_norm, Eigh, Svd};
pub use state::{haar_random_density, haar_random_state, purify, DensityMatrix, PureState};
