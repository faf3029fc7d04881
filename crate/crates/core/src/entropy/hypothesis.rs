//! Hypothesis-testing relative entropy by the Neyman–Pearson construction.
//!
//! The optimal test is `M = Π{ρ−tσ>0} + x·Π{ρ−tσ=0}`; `t` is located by bisection
//! (type-I mass `tr ρ Π{ρ−tσ>0}` is nonincreasing in `t`) and `x` fills the
//! boundary eigenspace so that `tr Mρ = 1−ε`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spectral::{eigh, Eigh};
use crate::linalg::ComplexMatrix;

use super::relative::mass_outside_support;

pub const MAX_BISECTION_STEPS: usize = 200;
pub const TYPE1_TOL: f64 = 1e-12;
/// Eigenvalues of ρ−tσ within this multiple of ‖ρ‖+t‖σ‖ form the boundary eigenspace.
pub const BOUNDARY_REL_TOL: f64 = 1e-10;

/// Optimal test summary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NPResult {
    pub threshold_t: f64,
    pub boundary_fraction_x: f64,
    /// tr Mρ.
    pub type1: f64,
    /// tr Mσ.
    pub type2: f64,
    /// −log₂ tr Mσ.
    pub value_bits: f64,
}

/// One block `ρ_k ⊕ … ` of a block-diagonal pair, repeated `multiplicity` times.
#[derive(Clone, Debug)]
pub struct WeightedBlock {
    pub rho: ComplexMatrix,
    pub sigma: ComplexMatrix,
    pub multiplicity: f64,
}

impl WeightedBlock {
    pub fn single(rho: ComplexMatrix, sigma: ComplexMatrix) -> Self {
        WeightedBlock { rho, sigma, multiplicity: 1.0 }
    }
}

struct Split {
    above: f64,
    boundary: f64,
    sigma_above: f64,
    sigma_boundary: f64,
}

/// Masses of ρ and σ on the positive and boundary eigenspaces of ρ−tσ.
fn split(blocks: &[WeightedBlock], norms: &[(f64, f64)], t: f64, band: f64) -> Result<Split> {
    let mut s = Split { above: 0.0, boundary: 0.0, sigma_above: 0.0, sigma_boundary: 0.0 };
    for (b, &(nr, ns)) in blocks.iter().zip(norms) {
        let diff = &b.rho - &b.sigma.scale(t);
        let e: Eigh = eigh(&diff)?;
        let tol = band * (nr + t * ns);
        for k in 0..e.values.len() {
            let lam = e.values[k];
            if lam < -tol {
                continue;
            }
            let v = e.vector(k);
            let r = quad(&b.rho, &v) * b.multiplicity;
            let q = quad(&b.sigma, &v) * b.multiplicity;
            if lam > tol {
                s.above += r;
                s.sigma_above += q;
            } else {
                s.boundary += r;
                s.sigma_boundary += q;
            }
        }
    }
    Ok(s)
}

fn quad(m: &ComplexMatrix, v: &[crate::linalg::C64]) -> f64 {
    crate::linalg::vec_inner(v, &m.apply(v)).re
}

fn spectral_norm_psd(m: &ComplexMatrix) -> Result<f64> {
    Ok(eigh(m)?.max().max(0.0))
}

/// D_H^ε(ρ‖σ) for a single pair; σ may be subnormalized.
pub fn dh(rho: &ComplexMatrix, sigma: &ComplexMatrix, eps: f64) -> Result<NPResult> {
    dh_blocks(&[WeightedBlock::single(rho.clone(), sigma.clone())], eps)
}

/// D_H^ε for a block-diagonal pair `⊕_k (ρ_k ⊗ 1_{m_k}, σ_k ⊗ 1_{m_k})`.
pub fn dh_blocks(blocks: &[WeightedBlock], eps: f64) -> Result<NPResult> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("ε must lie in [0,1), got {eps}")));
    }
    for b in blocks {
        if !b.rho.is_square() || b.rho.rows() != b.sigma.rows() || !b.sigma.is_square() {
            return Err(Error::Dimension("dh blocks must be square pairs of equal size".into()));
        }
    }
    let norms: Vec<(f64, f64)> =
        blocks.iter().map(|b| Ok((spectral_norm_psd(&b.rho)?, spectral_norm_psd(&b.sigma)?))).collect::<Result<_>>()?;
    let total: f64 = blocks.iter().map(|b| b.rho.trace().re * b.multiplicity).sum();
    let target = (1.0 - eps) * total;
    // ρ-mass outside supp σ is accepted at zero σ-cost.
    let mut outside = 0.0;
    for b in blocks {
        outside += mass_outside_support(&b.rho, &eigh(&b.sigma)?) * b.multiplicity;
    }
    if outside >= target - TYPE1_TOL {
        return Ok(infinite_result());
    }
    let strict = |t: f64| -> Result<f64> { Ok(split(blocks, &norms, t, 0.0)?.above) };

    // Bracket: type-I mass at `lo` exceeds the target, at `hi` it does not.
    let mut lo = 0.0f64;
    let smax = norms.iter().map(|n| n.1).fold(0.0, f64::max);
    let rmax = norms.iter().map(|n| n.0).fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(infinite_result());
    }
    let mut hi = (rmax / smax).max(1e-300) * 2.0;
    let mut doublings = 0;
    while strict(hi)? > target + TYPE1_TOL {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::Numerical("Neyman–Pearson threshold could not be bracketed".into()));
        }
    }

    let mut t = hi;
    for _ in 0..MAX_BISECTION_STEPS {
        let mid = if lo > 0.0 && hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            t = 0.5 * (lo + hi);
            break;
        }
        let g = strict(mid)?;
        if (g - target).abs() <= TYPE1_TOL {
            t = mid;
            break;
        }
        if g > target {
            lo = mid;
        } else {
            hi = mid;
        }
        t = 0.5 * (lo + hi);
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }

    let s = split(blocks, &norms, t, BOUNDARY_REL_TOL)?;
    let x = if s.boundary > 1e-300 { ((target - s.above) / s.boundary).clamp(0.0, 1.0) } else { 0.0 };
    let type1 = (s.above + x * s.boundary) / total;
    let type2 = s.sigma_above + x * s.sigma_boundary;
    if type1 < 1.0 - eps - 1e-9 {
        return Err(Error::Numerical(format!("Neyman–Pearson search reached type-I {type1} below {}", 1.0 - eps)));
    }
    let value_bits = if type2 > 0.0 { -type2.log2() } else { f64::INFINITY };
    Ok(NPResult { threshold_t: t, boundary_fraction_x: x, type1, type2, value_bits })
}

fn infinite_result() -> NPResult {
    NPResult { threshold_t: f64::INFINITY, boundary_fraction_x: 0.0, type1: 1.0, type2: 0.0, value_bits: f64::INFINITY }
}

/// Classical D_H^ε by the fractional-knapsack rule: accept outcomes in decreasing
/// likelihood-ratio order until mass `1−ε` of `p` is covered.
pub fn dh_classical(p: &[f64], q: &[f64], eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("ε must lie in [0,1), got {eps}")));
    }
    let mut idx: Vec<usize> = (0..p.len()).filter(|&i| p[i] > 0.0).collect();
    let ratio = |i: usize| if q[i] > 0.0 { p[i] / q[i] } else { f64::INFINITY };
    idx.sort_by(|&a, &b| ratio(b).total_cmp(&ratio(a)));
    let mut need = 1.0 - eps;
    let mut cost = 0.0;
    for i in idx {
        if need <= 0.0 {
            break;
        }
        let take = need.min(p[i]);
        cost += take / p[i] * q[i];
        need -= take;
    }
    Ok(if cost > 0.0 { -cost.log2() } else { f64::INFINITY })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{random_density, random_kraus, random_probabilities, random_unitary, rng_from_seed};

    fn plus() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]])
    }

    #[test]
    fn identical_states() {
        let rho = random_density(3, 2, &mut rng_from_seed(1));
        for &eps in &[0.0, 0.1, 0.5, 0.9] {
            let r = dh(&rho, &rho, eps).unwrap();
            assert!((r.value_bits + (1.0 - eps).log2()).abs() < 1e-9, "eps {eps}: {r:?}");
            assert!((r.type1 - (1.0 - eps)).abs() < 1e-12);
        }
    }

    #[test]
    fn plus_against_maximally_mixed() {
        let half = ComplexMatrix::identity(2).scale(0.5);
        for k in 1..10 {
            let eps = k as f64 / 10.0;
            let r = dh(&plus(), &half, eps).unwrap();
            assert!((r.value_bits - (1.0 - (1.0 - eps).log2())).abs() < 1e-9);
        }
    }

    #[test]
    fn commuting_pair_matches_knapsack() {
        let mut rng = rng_from_seed(2);
        for _ in 0..10 {
            let p = random_probabilities(4, &mut rng);
            let q = random_probabilities(4, &mut rng);
            let u = random_unitary(4, &mut rng);
            let rho = ComplexMatrix::diag_real(&p).conjugate_by(&u);
            let sigma = ComplexMatrix::diag_real(&q).conjugate_by(&u);
            let want = dh_classical(&p, &q, 0.1).unwrap();
            assert!((dh(&rho, &sigma, 0.1).unwrap().value_bits - want).abs() < 1e-8);
        }
    }

    #[test]
    fn monotone_in_eps_and_nonnegative() {
        let mut rng = rng_from_seed(3);
        let rho = random_density(3, 3, &mut rng);
        let sigma = random_density(3, 3, &mut rng);
        let mut prev = f64::NEG_INFINITY;
        for k in 0..20 {
            let v = dh(&rho, &sigma, k as f64 * 0.05).unwrap().value_bits;
            assert!(v >= prev - 1e-12);
            assert!(v >= -1e-12);
            prev = v;
        }
    }

    #[test]
    fn data_processing_spot_check() {
        let mut rng = rng_from_seed(4);
        for _ in 0..5 {
            let rho = random_density(3, 3, &mut rng);
            let sigma = random_density(3, 2, &mut rng);
            let kraus = random_kraus(3, 2, 3, &mut rng);
            let apply = |m: &ComplexMatrix| {
                kraus.iter().fold(ComplexMatrix::zeros(2, 2), |acc, k| &acc + &m.conjugate_by(k))
            };
            for &eps in &[0.05, 0.3, 0.7] {
                let before = dh(&rho, &sigma, eps).unwrap().value_bits;
                let after = dh(&apply(&rho), &apply(&sigma), eps).unwrap().value_bits;
                assert!(after <= before + 1e-8);
            }
        }
    }

    #[test]
    fn rejects_bad_eps() {
        let half = ComplexMatrix::identity(2).scale(0.5);
        assert!(matches!(dh(&half, &half, 1.0), Err(Error::Domain(_))));
        assert!(matches!(dh(&half, &half, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn subnormalized_sigma_shifts_value() {
        let rho = random_density(2, 2, &mut rng_from_seed(5));
        let sigma = random_density(2, 2, &mut rng_from_seed(6));
        let a = dh(&rho, &sigma, 0.2).unwrap().value_bits;
        let b = dh(&rho, &sigma.scale(0.25), 0.2).unwrap().value_bits;
        assert!((b - a - 2.0).abs() < 1e-9);
    }

    #[test]
    fn block_form_matches_dense() {
        let mut rng = rng_from_seed(7);
        let r1 = random_density(2, 2, &mut rng).scale(0.4);
        let r2 = random_density(2, 2, &mut rng).scale(0.2);
        let s1 = random_density(2, 2, &mut rng).scale(0.3);
        let s2 = random_density(2, 2, &mut rng).scale(0.2);
        let dense_r = ComplexMatrix::direct_sum(&[r1.clone(), r2.clone(), r2.clone(), r2.clone()]);
        let dense_s = ComplexMatrix::direct_sum(&[s1.clone(), s2.clone(), s2.clone(), s2.clone()]);
        let blocks = vec![
            WeightedBlock { rho: r1, sigma: s1, multiplicity: 1.0 },
            WeightedBlock { rho: r2, sigma: s2, multiplicity: 3.0 },
        ];
        for &eps in &[0.1, 0.5] {
            let a = dh_blocks(&blocks, eps).unwrap().value_bits;
            let b = dh(&dense_r, &dense_s, eps).unwrap().value_bits;
            assert!((a - b).abs() < 1e-9);
        }
    }
}
