//! Small dense semidefinite programming: an interior-point solver for block LMIs and
//! the min-entropy, hypothesis-testing and fidelity programs built on it.

pub mod problem;
pub mod programs;
pub mod solver;

pub use problem::{ComplexVar, HermitianEntry, HermitianVar, LmiBlock, SdpProblem};
pub use programs::{decoupling_fidelity_sdp, dh_sdp, fidelity_sdp, hmin, hmin_matrix, hmin_smooth, Smoothing, SMOOTH_HMIN_MAX_DIM};
pub use solver::{solve, solve_with, SdpSolution, SdpStatus, SolverOptions};
