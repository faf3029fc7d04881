//! Relative entropy, information variance and max-relative entropy.

use crate::error::{Error, Result};
use crate::linalg::spectral::{eigh, pinv_sqrt_psd, support_cutoff, Eigh};
use crate::linalg::ComplexMatrix;

/// Support tolerance: mass of ρ outside supp(σ) above this is a support violation.
pub const SUPPORT_TOL: f64 = 1e-10;

fn check_pair(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<()> {
    if rho.rows() != sigma.rows() || !rho.is_square() || !sigma.is_square() {
        return Err(Error::Dimension("relative entropy needs equal square dimensions".into()));
    }
    Ok(())
}

/// ρ's weight outside the support of σ.
pub fn mass_outside_support(rho: &ComplexMatrix, sigma: &Eigh) -> f64 {
    let cut = support_cutoff(&sigma.values);
    let kernel = sigma.projector(|x| x <= cut);
    rho.trace_product(&kernel).re.max(0.0)
}

/// Base-2 logarithm on the support, zero on the kernel.
fn log2_on_support(e: &Eigh) -> ComplexMatrix {
    let cut = support_cutoff(&e.values);
    e.apply_fn(|x| if x > cut { x.log2() } else { 0.0 })
}

fn log_difference(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_pair(rho, sigma)?;
    let es = eigh(sigma)?;
    let out = mass_outside_support(rho, &es);
    if out > SUPPORT_TOL {
        return Err(Error::InfiniteDivergence(format!("ρ has weight {out:.3e} outside supp σ")));
    }
    let er = eigh(rho)?;
    Ok(&log2_on_support(&er) - &log2_on_support(&es))
}

/// D(ρ‖σ) = tr ρ(log ρ − log σ).
pub fn rel_entropy(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    let l = log_difference(rho, sigma)?;
    Ok(rho.trace_product(&l).re)
}

/// V(ρ‖σ) = tr ρ(log ρ − log σ)² − D².
pub fn rel_entropy_variance(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    let l = log_difference(rho, sigma)?;
    let d = rho.trace_product(&l).re;
    let second = rho.trace_product(&l.matmul(&l)).re;
    Ok(second - d * d)
}

/// D_max(ρ‖σ) = log λ_max(σ^{-1/2} ρ σ^{-1/2}) with the pseudo-inverse on the kernel.
pub fn dmax(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    check_pair(rho, sigma)?;
    let es = eigh(sigma)?;
    let out = mass_outside_support(rho, &es);
    if out > SUPPORT_TOL {
        return Err(Error::InfiniteDivergence(format!("ρ has weight {out:.3e} outside supp σ")));
    }
    let s = pinv_sqrt_psd(sigma)?;
    let m = rho.conjugate_by(&s).hermitian_part();
    Ok(eigh(&m)?.max().log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{random_density, random_probabilities, random_unitary, rng_from_seed};

    fn plus() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]])
    }

    fn classical_d_v(p: &[f64], q: &[f64]) -> (f64, f64) {
        let d: f64 = p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).log2()).sum();
        let m2: f64 = p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).log2().powi(2)).sum();
        (d, m2 - d * d)
    }

    #[test]
    fn self_divergence_vanishes() {
        let rho = random_density(3, 3, &mut rng_from_seed(1));
        assert!(rel_entropy(&rho, &rho).unwrap().abs() < 1e-12);
        assert!(rel_entropy_variance(&rho, &rho).unwrap().abs() < 1e-12);
        assert!(dmax(&rho, &rho).unwrap().abs() < 1e-12);
    }

    #[test]
    fn plus_against_maximally_mixed() {
        let half = ComplexMatrix::identity(2).scale(0.5);
        assert!((rel_entropy(&plus(), &half).unwrap() - 1.0).abs() < 1e-12);
        assert!(rel_entropy_variance(&plus(), &half).unwrap().abs() < 1e-12);
    }

    #[test]
    fn dmax_of_basis_state_against_mixed() {
        let z0 = ComplexMatrix::diag_real(&[1.0, 0.0]);
        assert!((dmax(&z0, &ComplexMatrix::identity(2).scale(0.5)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn support_violation_is_infinite() {
        let z0 = ComplexMatrix::diag_real(&[1.0, 0.0]);
        let z1 = ComplexMatrix::diag_real(&[0.0, 1.0]);
        assert!(matches!(rel_entropy(&z0, &z1), Err(Error::InfiniteDivergence(_))));
        assert!(matches!(dmax(&z0, &z1), Err(Error::InfiniteDivergence(_))));
    }

    #[test]
    fn commuting_pairs_match_classical_formula() {
        let mut rng = rng_from_seed(2);
        for _ in 0..10 {
            let p = random_probabilities(4, &mut rng);
            let q = random_probabilities(4, &mut rng);
            let u = random_unitary(4, &mut rng);
            let rho = ComplexMatrix::diag_real(&p).conjugate_by(&u);
            let sigma = ComplexMatrix::diag_real(&q).conjugate_by(&u);
            let (d, v) = classical_d_v(&p, &q);
            assert!((rel_entropy(&rho, &sigma).unwrap() - d).abs() < 1e-8);
            assert!((rel_entropy_variance(&rho, &sigma).unwrap() - v).abs() < 1e-8);
            let dm = p.iter().zip(&q).map(|(a, b)| a / b).fold(0.0, f64::max).log2();
            assert!((dmax(&rho, &sigma).unwrap() - dm).abs() < 1e-8);
        }
    }

    #[test]
    fn dmax_matches_feasibility_bisection() {
        let mut rng = rng_from_seed(3);
        for _ in 0..5 {
            let rho = random_density(3, 3, &mut rng);
            let sigma = random_density(3, 3, &mut rng);
            let (mut lo, mut hi) = (-10.0f64, 20.0f64);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                let gap = &sigma.scale(mid.exp2()) - &rho;
                if eigh(&gap).unwrap().min() >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            assert!((dmax(&rho, &sigma).unwrap() - hi).abs() < 1e-8);
        }
    }
}
