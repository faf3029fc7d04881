//! Correction terms of the one-shot hypothesis-testing bounds and the
//! second-order normal approximation.

use crate::error::{Error, Result};
use crate::linalg::{dephase_operator, DensityMatrix};

use super::normal::inv_normal_cdf;
use super::spectrum::{theta, Theta};

/// Admissible smoothing parameters for the unassisted bound: η ∈ (0,ε) and
/// δ ∈ (0, min{(ε−η)²/3, 1−(ε−η)²}).
pub fn check_unassisted_params(eps: f64, delta: f64, eta: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("ε must lie in (0,1), got {eps}")));
    }
    if !(eta > 0.0 && eta < eps) {
        return Err(Error::Domain(format!("η must lie in (0,ε), got {eta}")));
    }
    let g = (eps - eta).powi(2);
    let cap = (g / 3.0).min(1.0 - g);
    if !(delta > 0.0 && delta < cap) {
        return Err(Error::Domain(format!("δ must lie in (0,{cap}), got {delta}")));
    }
    Ok(())
}

/// Admissible δ for the assisted min-entropy bound: δ ∈ (0, min{ε²/3, 1−ε²}).
pub fn check_assisted_params(eps: f64, delta: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("ε must lie in (0,1), got {eps}")));
    }
    let g = eps * eps;
    let cap = (g / 3.0).min(1.0 - g);
    if !(delta > 0.0 && delta < cap) {
        return Err(Error::Domain(format!("δ must lie in (0,{cap}), got {delta}")));
    }
    Ok(())
}

/// c = log θ₁ + log θ₂ + log((ε−η)²−δ) − log(δ⁵η⁴(ε−η)²(1−(ε−η)²+δ)) + 11.
pub fn correction_from_theta_unassisted(t1: Theta, t2: Theta, eps: f64, delta: f64, eta: f64) -> Result<f64> {
    check_unassisted_params(eps, delta, eta)?;
    let g = (eps - eta).powi(2);
    let inner = delta.powi(5) * eta.powi(4) * g * (1.0 - g + delta);
    Ok(t1.log2() + t2.log2() + (g - delta).log2() - inner.log2() + 11.0)
}

/// c = log θ₁ + log θ₂ + log(ε²−δ) − log(δ⁵ε²(1−ε²+δ)) + 8.
pub fn correction_from_theta_assisted(t1: Theta, t2: Theta, eps: f64, delta: f64) -> Result<f64> {
    check_assisted_params(eps, delta)?;
    let g = eps * eps;
    let inner = delta.powi(5) * g * (1.0 - g + delta);
    Ok(t1.log2() + t2.log2() + (g - delta).log2() - inner.log2() + 8.0)
}

/// Unassisted correction with θ evaluated on ρ and on its full dephasing.
pub fn correction_c_unassisted(rho: &DensityMatrix, eps: f64, delta: f64, eta: f64) -> Result<f64> {
    let dephased = full_dephasing(rho)?;
    correction_from_theta_unassisted(theta(rho.matrix())?, theta(&dephased)?, eps, delta, eta)
}

/// Assisted correction with θ on ρ_AB and on Δ_B(ρ_AB); `b_label` names Bob's factor.
pub fn correction_c_assisted(rho_ab: &DensityMatrix, b_label: &str, eps: f64, delta: f64) -> Result<f64> {
    let dephased = dephase_operator(rho_ab.matrix(), rho_ab.layout(), b_label)?;
    correction_from_theta_assisted(theta(rho_ab.matrix())?, theta(&dephased)?, eps, delta)
}

fn full_dephasing(rho: &DensityMatrix) -> Result<crate::linalg::ComplexMatrix> {
    let mut m = rho.matrix().clone();
    for label in rho.layout().labels() {
        m = dephase_operator(&m, rho.layout(), label)?;
    }
    Ok(m)
}

/// nD + √(nV)·Φ⁻¹(ε²).
pub fn second_order_estimate(d: f64, v: f64, eps: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if v < -1e-9 {
        return Err(Error::Domain(format!("variance must be nonnegative, got {v}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("ε must lie in (0,1), got {eps}")));
    }
    second_order_at_level(d, v, eps * eps, n)
}

/// nD + √(nV)·Φ⁻¹(level), for callers that hold ε² exactly.
pub fn second_order_at_level(d: f64, v: f64, level: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let n = n as f64;
    let q = inv_normal_cdf(level)?;
    Ok(n * d + (n * v.max(0.0)).sqrt() * q)
}
