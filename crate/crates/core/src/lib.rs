//! Numerical toolkit for one-shot and second-order coherence distillation and
//! incoherent randomness extraction.
//!
//! Logarithms are base 2 throughout.

pub mod asymptotics;
pub mod coherence;
pub mod entropy;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod ns;
pub mod protocols;
pub mod sdp;
pub mod validation;

pub use error::{Error, Result};
