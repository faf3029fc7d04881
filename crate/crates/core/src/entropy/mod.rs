//! One-shot and asymptotic entropic quantities. All logarithms are base 2.

pub mod correction;
pub mod hypothesis;
pub mod normal;
pub mod relative;
pub mod spectrum;

use serde::{Deserialize, Serialize};

pub use correction::{
    correction_c_assisted, correction_c_unassisted, correction_from_theta_assisted, correction_from_theta_unassisted,
    second_order_at_level, second_order_estimate,
};
pub use hypothesis::{dh, dh_blocks, dh_classical, NPResult, WeightedBlock};
pub use normal::{inv_normal_cdf, normal_cdf, normal_pdf};
pub use relative::{dmax, rel_entropy, rel_entropy_variance};
pub use spectrum::{ds_spectrum, ds_spectrum_sided, theta, theta_from_spectrum, theta_tensor_power, SpectrumValue, Theta};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DhEntry {
    pub eps: f64,
    /// `None` when the value is +∞.
    pub bits: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderEntry {
    pub n: usize,
    pub eps: f64,
    pub bits: f64,
}

/// Entropic summary of a pair (ρ, σ). Infinite divergences serialize as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    #[serde(rename = "D_bits")]
    pub d_bits: Option<f64>,
    #[serde(rename = "V_bits2")]
    pub v_bits2: Option<f64>,
    pub dh_bits: Vec<DhEntry>,
    pub dmax_bits: Option<f64>,
    /// θ(σ).
    pub theta: u64,
    pub theta_clamped: bool,
    pub second_order_bits: Vec<SecondOrderEntry>,
}

fn finite_or_none(r: Result<f64>) -> Result<Option<f64>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::InfiniteDivergence(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Builds an [`EntropyReport`]; second-order entries are produced for every
/// (n, ε) pair with ε ∈ (0,1) when D and V are finite.
pub fn entropy_report(rho: &ComplexMatrix, sigma: &ComplexMatrix, eps_list: &[f64], n_list: &[usize]) -> Result<EntropyReport> {
    let d_bits = finite_or_none(rel_entropy(rho, sigma))?;
    let v_bits2 = finite_or_none(rel_entropy_variance(rho, sigma))?;
    let dmax_bits = finite_or_none(dmax(rho, sigma))?;
    let mut dh_bits = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let v = dh(rho, sigma, eps)?.value_bits;
        dh_bits.push(DhEntry { eps, bits: v.is_finite().then_some(v) });
    }
    let th = theta(sigma)?;
    let mut second_order_bits = Vec::new();
    if let (Some(d), Some(v)) = (d_bits, v_bits2) {
        for &n in n_list {
            for &eps in eps_list.iter().filter(|&&e| e > 0.0 && e < 1.0) {
                second_order_bits.push(SecondOrderEntry { n, eps, bits: second_order_estimate(d, v, eps, n)? });
            }
        }
    }
    Ok(EntropyReport { d_bits, v_bits2, dh_bits, dmax_bits, theta: th.value, theta_clamped: th.clamped, second_order_bits })
}
