//! Fidelity and purified distance.

use super::matrix::ComplexMatrix;
use super::spectral::{sqrt_psd, trace_norm};
use super::state::DensityMatrix;
use crate::error::{Error, Result};

/// Values of `1 − F²` below this are indistinguishable from zero in double precision
/// and are reported as exactly zero distance.
pub const INFIDELITY_FLOOR: f64 = 1e-15;

/// Generalized fidelity ‖√A√B‖₁ + √((1−tr A)(1−tr B)) of subnormalized PSD operators.
pub fn fidelity_psd(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    if a.rows() != b.rows() || !a.is_square() || !b.is_square() {
        return Err(Error::Dimension(format!("fidelity of {}x{} and {}x{}", a.rows(), a.cols(), b.rows(), b.cols())));
    }
    let sa = sqrt_psd(a)?;
    let sb = sqrt_psd(b)?;
    let overlap = trace_norm(&sa.matmul(&sb))?;
    let ta = a.trace().re;
    let tb = b.trace().re;
    let defect = ((1.0 - ta).max(0.0) * (1.0 - tb).max(0.0)).sqrt();
    Ok(overlap + defect)
}

/// F(ρ,σ) = ‖√ρ√σ‖₁ for states.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    fidelity_psd(rho.matrix(), sigma.matrix())
}

/// √(1 − F²) with the floor [`INFIDELITY_FLOOR`].
pub fn distance_from_fidelity(f: f64) -> f64 {
    let inf = 1.0 - f.min(1.0) * f.min(1.0);
    if inf < INFIDELITY_FLOOR {
        0.0
    } else {
        inf.sqrt().min(1.0)
    }
}

pub fn purified_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    Ok(distance_from_fidelity(fidelity(rho, sigma)?))
}

pub fn purified_distance_psd(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<f64> {
    Ok(distance_from_fidelity(fidelity_psd(a, b)?))
}

/// Fidelity of block-diagonal classical-quantum operators Σ√(pᵢqᵢ)F(ρᵢ,σᵢ).
pub fn cq_fidelity(p: &[f64], rhos: &[ComplexMatrix], q: &[f64], sigmas: &[ComplexMatrix]) -> Result<f64> {
    if p.len() != rhos.len() || q.len() != sigmas.len() || p.len() != q.len() {
        return Err(Error::Dimension("cq_fidelity needs equal block counts".into()));
    }
    if p.iter().chain(q).any(|&w| w < 0.0) {
        return Err(Error::Domain("negative block weight".into()));
    }
    let mut total = 0.0;
    for i in 0..p.len() {
        if p[i] == 0.0 || q[i] == 0.0 {
            continue;
        }
        total += (p[i] * q[i]).sqrt() * fidelity_psd(&rhos[i], &sigmas[i])?;
    }
    Ok(total)
}
