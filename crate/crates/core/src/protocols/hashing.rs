//! Min-entropy bounds on extractable randomness under the identity preprocessing.

use serde::{Deserialize, Serialize};

use super::extraction::{extractable_randomness_exhaustive, prepare_extraction, SearchOptions, REF_LABEL};
use crate::coherence::{dephase, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::DensityMatrix;
use crate::sdp::{hmin_smooth, Smoothing};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HashingBoundCheck {
    pub eps: f64,
    pub eta: f64,
    /// Exhaustive log|L| at ε.
    pub exact_bits: f64,
    /// H_min^{ε−η}(C|R) + 4 log η − 3, rounded down.
    pub lower_bits: f64,
    /// H_min^ε(C|R), rounded up.
    pub upper_bits: f64,
    pub hmin_eps: f64,
    pub hmin_eps_minus_eta: f64,
    pub holds: bool,
}

/// Compares the exhaustive rate with the leftover-hash lower bound and the
/// min-entropy upper bound, both on the dephased purification Δ_C(ψ_CR).
pub fn hashing_bound_check(rho_b: &DensityMatrix, eps: f64, eta: f64) -> Result<HashingBoundCheck> {
    if !(0.0 < eta && eta < eps && eps < 1.0) {
        return Err(Error::Domain(format!("need 0 < η < ε < 1, got η = {eta}, ε = {eps}")));
    }
    let id = KrausChannel::identity(rho_b.layout().clone());
    let prep = prepare_extraction(rho_b, &id)?;
    let c = prep.register.clone();
    let cr = dephase(&prep.phi.density().partial_trace(&[&c, REF_LABEL])?, &c)?;
    let hmin_eps = hmin_smooth(&cr, &c, REF_LABEL, eps, Smoothing::Subnormalized)?;
    let hmin_lo = hmin_smooth(&cr, &c, REF_LABEL, eps - eta, Smoothing::Subnormalized)?;
    let exact = extractable_randomness_exhaustive(rho_b, &id, eps, &SearchOptions::default())?.log_l;
    let lower = (hmin_lo + 4.0 * eta.log2() - 3.0).floor();
    let upper = (hmin_eps - 1e-9).ceil();
    Ok(HashingBoundCheck {
        eps,
        eta,
        exact_bits: exact,
        lower_bits: lower,
        upper_bits: upper,
        hmin_eps,
        hmin_eps_minus_eta: hmin_lo,
        holds: lower <= exact + 1e-9 && exact <= upper + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::mcs;

    #[test]
    fn plus_state_sits_inside_the_bounds() {
        let plus = mcs(2, "B").unwrap().density();
        let r = hashing_bound_check(&plus, 0.3, 0.15).unwrap();
        assert_eq!(r.exact_bits, 1.0);
        assert!(r.holds, "{r:?}");
    }
}
