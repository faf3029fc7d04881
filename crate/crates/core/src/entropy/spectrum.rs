//! Information-spectrum relative entropy and the θ spectral penalty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::spectral::eigvalsh;
use crate::linalg::ComplexMatrix;

/// Log-ratios closer than this are merged into one atom.
pub const ATOM_MERGE_TOL: f64 = 1e-12;
/// ε within this distance of a cumulative atom mass counts as a discontinuity.
pub const ATOM_HIT_TOL: f64 = 1e-12;

/// D_s^ε together with its one-sided limits in ε.
///
/// `value` uses the convention D_s^ε = inf{x : P[Z ≤ x] > ε} with Z = log(P/Q),
/// i.e. the supremum of {x : P[Z ≤ x] ≤ ε} with a right-continuous distribution
/// function. At an atom boundary `left` (ε → ε⁻) and `right` (ε → ε⁺) differ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumValue {
    pub value: f64,
    pub left: f64,
    pub right: f64,
    pub at_atom: bool,
}

/// Atoms `(log-ratio, P-mass)` of the log-likelihood ratio, sorted ascending.
pub fn log_ratio_atoms(p: &[f64], q: &[f64]) -> Result<Vec<(f64, f64)>> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!("distributions of length {} and {}", p.len(), q.len())));
    }
    if p.iter().chain(q).any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::Domain("distribution weights must be finite and nonnegative".into()));
    }
    let mut raw: Vec<(f64, f64)> = p
        .iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| (if b > 0.0 { (a / b).log2() } else { f64::INFINITY }, a))
        .collect();
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
    for (z, w) in raw {
        match atoms.last_mut() {
            Some(last) if (z - last.0).abs() <= ATOM_MERGE_TOL || (z.is_infinite() && last.0.is_infinite()) => {
                last.1 += w
            }
            _ => atoms.push((z, w)),
        }
    }
    Ok(atoms)
}

/// inf{x : P[Z ≤ x] > level}; +∞ when no atom lifts the mass above `level`.
fn quantile_above(atoms: &[(f64, f64)], level: f64) -> f64 {
    let mut cum = 0.0;
    for &(z, w) in atoms {
        cum += w;
        if cum > level {
            return z;
        }
    }
    f64::INFINITY
}

/// D_s^ε(P‖Q) with one-sided limits.
pub fn ds_spectrum_sided(p: &[f64], q: &[f64], eps: f64) -> Result<SpectrumValue> {
    let atoms = log_ratio_atoms(p, q)?;
    let value = quantile_above(&atoms, eps);
    let left = quantile_above(&atoms, eps - ATOM_HIT_TOL);
    let right = quantile_above(&atoms, eps + ATOM_HIT_TOL);
    Ok(SpectrumValue { value, left, right, at_atom: left != right })
}

/// D_s^ε(P‖Q) = sup{x : P[P ≤ 2ˣ Q] ≤ ε}.
pub fn ds_spectrum(p: &[f64], q: &[f64], eps: f64) -> Result<f64> {
    Ok(ds_spectrum_sided(p, q, eps)?.value)
}

/// Cumulative P-masses at which D_s^ε jumps.
pub fn atom_levels(p: &[f64], q: &[f64]) -> Result<Vec<f64>> {
    let mut cum = 0.0;
    Ok(log_ratio_atoms(p, q)?
        .into_iter()
        .map(|(_, w)| {
            cum += w;
            cum
        })
        .collect())
}

/// θ = min{2⌈λ⌉, ν}, with λ = log λ_max − log λ_min over the nonzero spectrum and
/// ν the number of distinct nonzero eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Theta {
    pub value: u64,
    pub raw: u64,
    pub clamped: bool,
}

impl Theta {
    pub fn log2(&self) -> f64 {
        (self.value as f64).log2()
    }
}

/// Relative cutoff for "nonzero" eigenvalues in θ.
pub const THETA_ZERO_TOL: f64 = 1e-12;
/// Relative gap separating distinct eigenvalues in ν.
pub const THETA_CLUSTER_TOL: f64 = 1e-9;

/// θ from a spectrum (any order).
pub fn theta_from_spectrum(values: &[f64]) -> Result<Theta> {
    let top = values.iter().cloned().fold(0.0f64, f64::max);
    if top <= 0.0 {
        return Err(Error::Domain("θ needs a nonzero PSD operator".into()));
    }
    let mut nz: Vec<f64> = values.iter().cloned().filter(|&v| v > THETA_ZERO_TOL * top).collect();
    nz.sort_by(f64::total_cmp);
    let mut distinct = 1u64;
    for w in nz.windows(2) {
        if w[1] - w[0] > THETA_CLUSTER_TOL * top {
            distinct += 1;
        }
    }
    let lambda = nz[nz.len() - 1].log2() - nz[0].log2();
    // Spread below the clustering tolerance counts as flat.
    let ceil = if lambda <= 1e-9 { 0 } else { (lambda - 1e-9).ceil() as u64 };
    let raw = (2 * ceil).min(distinct);
    Ok(Theta { value: raw.max(1), raw, clamped: raw < 1 })
}

pub fn theta(sigma: &ComplexMatrix) -> Result<Theta> {
    theta_from_spectrum(&eigvalsh(sigma)?)
}

/// θ(σ^{⊗n}) from σ's spectrum, enumerating eigenvalue products by type class.
pub fn theta_tensor_power(sigma: &ComplexMatrix, n: usize) -> Result<Theta> {
    let base = eigvalsh(sigma)?;
    let top = base.iter().cloned().fold(0.0f64, f64::max);
    let nz: Vec<f64> = base.into_iter().filter(|&v| v > THETA_ZERO_TOL * top).collect();
    let mut products = Vec::new();
    let mut counts = vec![0usize; nz.len()];
    enumerate_types(n, 0, &mut counts, &mut |c| {
        products.push(c.iter().zip(&nz).map(|(&k, &v)| v.powi(k as i32)).product::<f64>());
    });
    theta_from_spectrum(&products)
}

/// Calls `visit` with every composition of `n` into `counts.len()` nonnegative parts.
pub fn enumerate_types(n: usize, pos: usize, counts: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    if counts.is_empty() {
        return;
    }
    if pos == counts.len() - 1 {
        counts[pos] = n;
        visit(counts);
        return;
    }
    for k in 0..=n {
        counts[pos] = k;
        enumerate_types(n - k, pos + 1, counts, visit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{random_density, random_probabilities, rng_from_seed};
    use crate::linalg::kron;

    #[test]
    fn self_spectrum_is_zero() {
        let p = [0.2, 0.3, 0.5];
        for &eps in &[0.0, 0.3, 0.99] {
            assert_eq!(ds_spectrum(&p, &p, eps).unwrap(), 0.0);
        }
    }

    #[test]
    fn two_point_example() {
        assert!((ds_spectrum(&[1.0, 0.0], &[0.5, 0.5], 0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_dense_grid() {
        let mut rng = rng_from_seed(9);
        let p = random_probabilities(8, &mut rng);
        let q = random_probabilities(8, &mut rng);
        let eps = 0.3;
        let exact = ds_spectrum(&p, &q, eps).unwrap();
        let feasible = |x: f64| -> bool {
            let mass: f64 = p.iter().zip(&q).filter(|(a, b)| **a <= x.exp2() * **b).map(|(a, _)| a).sum();
            mass <= eps
        };
        let mut best = f64::NEG_INFINITY;
        let mut x = -10.0;
        while x <= 10.0 {
            if feasible(x) {
                best = x;
            }
            x += 1e-4;
        }
        assert!(exact - best >= -1e-12 && exact - best <= 1e-4 + 1e-12, "{exact} vs {best}");
    }

    #[test]
    fn atom_boundaries_report_both_sides() {
        let p = [0.5, 0.5];
        let q = [0.25, 0.75];
        let s = ds_spectrum_sided(&p, &q, 0.5).unwrap();
        assert!(s.at_atom);
        assert!(s.left < s.right);
        assert!(!ds_spectrum_sided(&p, &q, 0.3).unwrap().at_atom);
    }

    #[test]
    fn theta_examples() {
        let flat = theta(&ComplexMatrix::identity(2).scale(0.5)).unwrap();
        assert_eq!((flat.value, flat.raw, flat.clamped), (1, 0, true));
        let t = theta(&ComplexMatrix::diag_real(&[0.75, 0.25])).unwrap();
        assert_eq!((t.value, t.clamped), (2, false));
    }

    #[test]
    fn theta_ignores_kernel() {
        let t = theta(&ComplexMatrix::diag_real(&[0.5, 0.5, 0.0])).unwrap();
        assert_eq!(t.value, 1);
    }

    #[test]
    fn theta_tensor_power_bound_and_dense_agreement() {
        let mut rng = rng_from_seed(10);
        for _ in 0..5 {
            let s = random_density(2, 2, &mut rng);
            let e = eigvalsh(&s).unwrap();
            let lam = e[1].log2() - e[0].log2();
            let mut dense = s.clone();
            for n in 1..=6 {
                if n > 1 {
                    dense = kron(&dense, &s);
                }
                let t = theta_tensor_power(&s, n).unwrap();
                assert!(t.value as f64 <= 2.0 * (n as f64 * lam).ceil());
                if n <= 4 {
                    assert_eq!(t, theta(&dense).unwrap());
                }
            }
        }
    }
}
