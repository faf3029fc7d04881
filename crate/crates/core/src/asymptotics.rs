//! i.i.d. tensor powers: exact hypothesis-testing divergences, one-shot
//! sandwich bounds on distillable coherence, second-order and strong-converse curves.

use serde::{Deserialize, Serialize};

use crate::entropy::{
    correction_from_theta_assisted, correction_from_theta_unassisted, dh_blocks, inv_normal_cdf, normal_cdf, rel_entropy,
    rel_entropy_variance, second_order_at_level, theta_tensor_power, WeightedBlock,
};
use crate::error::{Error, Result};
use crate::exec::{map_slice, Execution};
use crate::linalg::{dephase_operator, eigh, kron, ComplexMatrix, DensityMatrix, C64, MAX_DIM};

/// Commutator size below which a pair is treated as commuting.
pub const COMMUTE_TOL: f64 = 1e-12;

/// Largest n for the qubit Schur–Weyl path. The symmetric-power entries are sums
/// of signed terms with binomial weights, and beyond about a hundred copies the
/// cancellation visibly corrupts the blocks.
pub const SCHUR_WEYL_MAX_N: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IidMethod {
    /// Joint eigenbasis, product distribution grouped by type class.
    Classical,
    /// Qubit pair decomposed into Schur–Weyl blocks.
    SchurWeyl,
    Dense,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IidDh {
    pub bits: f64,
    pub method: IidMethod,
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// ‖ρσ − σρ‖_max.
pub fn commutator_defect(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> f64 {
    rho.matmul(sigma).max_diff(&sigma.matmul(rho))
}

/// Symmetric power Sym^m(X) of a 2×2 matrix in the orthonormal Dicke basis.
pub fn sym_power(x: &ComplexMatrix, m: usize) -> ComplexMatrix {
    let (a, b, c, d) = (x[(0, 0)], x[(0, 1)], x[(1, 0)], x[(1, 1)]);
    let pow = |z: C64, k: usize| -> C64 { (0..k).fold(C64::new(1.0, 0.0), |acc, _| acc * z) };
    ComplexMatrix::from_fn(m + 1, m + 1, |i, j| {
        // Coefficient of e0^{m−i} e1^i in (a e0 + c e1)^{m−j} (b e0 + d e1)^j.
        let mut acc = C64::new(0.0, 0.0);
        for s in 0..=(m - j).min(i) {
            let t = i - s;
            if t > j {
                continue;
            }
            let w = binomial(m - j, s) * binomial(j, t);
            acc += pow(c, s) * pow(a, m - j - s) * pow(d, t) * pow(b, j - t) * w;
        }
        acc * (binomial(m, j) / binomial(m, i)).sqrt()
    })
}

fn det2(x: &ComplexMatrix) -> C64 {
    x[(0, 0)] * x[(1, 1)] - x[(0, 1)] * x[(1, 0)]
}

/// Schur–Weyl blocks of (ρ^{⊗n}, σ^{⊗n}) for qubits: the irrep with k
/// antisymmetric pairs carries det^k · Sym^{n−2k} with multiplicity C(n,k) − C(n,k−1).
pub fn schur_weyl_blocks(rho: &ComplexMatrix, sigma: &ComplexMatrix, n: usize) -> Vec<WeightedBlock> {
    (0..=n / 2)
        .map(|k| {
            let mult = binomial(n, k) - if k > 0 { binomial(n, k - 1) } else { 0.0 };
            let dr = det2(rho);
            let ds = det2(sigma);
            let scale = |d: C64| (0..k).fold(C64::new(1.0, 0.0), |acc, _| acc * d);
            WeightedBlock {
                rho: sym_power(rho, n - 2 * k).scale_c(scale(dr)).hermitian_part(),
                sigma: sym_power(sigma, n - 2 * k).scale_c(scale(ds)).hermitian_part(),
                multiplicity: mult,
            }
        })
        .collect()
}

/// Joint spectrum (p_i, q_i) of a commuting pair.
fn joint_spectrum(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    // A generic combination separates common eigenspaces.
    let e = eigh(&(rho + &sigma.scale(0.618_033_988_749_894_9)).hermitian_part())?;
    let d = rho.rows();
    let mut p = Vec::with_capacity(d);
    let mut q = Vec::with_capacity(d);
    for k in 0..d {
        let v = e.vector(k);
        p.push(crate::linalg::vec_inner(&v, &rho.apply(&v)).re.max(0.0));
        q.push(crate::linalg::vec_inner(&v, &sigma.apply(&v)).re.max(0.0));
    }
    Ok((p, q))
}

/// Product distributions grouped by type class, as 1×1 weighted blocks.
fn type_class_blocks(p: &[f64], q: &[f64], n: usize) -> Vec<WeightedBlock> {
    let mut out = Vec::new();
    let mut counts = vec![0usize; p.len()];
    crate::entropy::spectrum::enumerate_types(n, 0, &mut counts, &mut |c| {
        let mut mult = 1.0;
        let mut left = n;
        for &k in c {
            mult *= binomial(left, k);
            left -= k;
        }
        let pr: f64 = c.iter().zip(p).map(|(&k, &x)| x.powi(k as i32)).product();
        let qr: f64 = c.iter().zip(q).map(|(&k, &x)| x.powi(k as i32)).product();
        if pr > 0.0 || qr > 0.0 {
            out.push(WeightedBlock {
                rho: ComplexMatrix::diag_real(&[pr]),
                sigma: ComplexMatrix::diag_real(&[qr]),
                multiplicity: mult,
            });
        }
    });
    out
}

/// D_H^ε(ρ^{⊗n} ‖ σ^{⊗n}). Commuting pairs and qubit pairs are reduced
/// exactly; other pairs are built densely, subject to dim^n ≤ `max_dim`.
pub fn iid_dh_with(rho: &ComplexMatrix, sigma: &ComplexMatrix, n: usize, eps: f64, max_dim: usize) -> Result<IidDh> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    if !rho.is_square() || rho.rows() != sigma.rows() || !sigma.is_square() {
        return Err(Error::Dimension("iid_dh needs square operators of equal size".into()));
    }
    let d = rho.rows();
    if commutator_defect(rho, sigma) <= COMMUTE_TOL {
        let (p, q) = joint_spectrum(rho, sigma)?;
        let r = dh_blocks(&type_class_blocks(&p, &q, n), eps)?;
        return Ok(IidDh { bits: r.value_bits, method: IidMethod::Classical });
    }
    if d == 2 {
        if n > SCHUR_WEYL_MAX_N {
            return Err(Error::Guard(format!("qubit block reduction is limited to n ≤ {SCHUR_WEYL_MAX_N}, got {n}")));
        }
        let r = dh_blocks(&schur_weyl_blocks(rho, sigma, n), eps)?;
        return Ok(IidDh { bits: r.value_bits, method: IidMethod::SchurWeyl });
    }
    let total = (d as f64).powi(n as i32);
    if total > max_dim.min(MAX_DIM) as f64 {
        return Err(Error::Guard(format!("dense tensor power of dimension {total} exceeds the guard {}", max_dim.min(MAX_DIM))));
    }
    let r = crate::entropy::dh(&tensor_power(rho, n), &tensor_power(sigma, n), eps)?;
    Ok(IidDh { bits: r.value_bits, method: IidMethod::Dense })
}

pub fn iid_dh(rho: &ComplexMatrix, sigma: &ComplexMatrix, n: usize, eps: f64) -> Result<IidDh> {
    iid_dh_with(rho, sigma, n, eps, MAX_DIM)
}

pub fn tensor_power(m: &ComplexMatrix, n: usize) -> ComplexMatrix {
    (1..n).fold(m.clone(), |acc, _| kron(&acc, m))
}

/// Evaluation point of a curve. Infinite or unavailable values are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: usize,
    pub eps: f64,
    pub lower_bits: Option<f64>,
    pub upper_bits: Option<f64>,
    pub exact_bits: Option<f64>,
    pub second_order_bits: Option<f64>,
    pub epsilon_lower_bound: Option<f64>,
    pub flags: Vec<String>,
}

impl CurvePoint {
    fn empty(n: usize, eps: f64) -> Self {
        CurvePoint {
            n,
            eps,
            lower_bits: None,
            upper_bits: None,
            exact_bits: None,
            second_order_bits: None,
            epsilon_lower_bound: None,
            flags: Vec::new(),
        }
    }

    /// lower ≤ upper + 1e-9 whenever both are present.
    pub fn ordered(&self) -> bool {
        match (self.lower_bits, self.upper_bits) {
            (Some(l), Some(u)) => l <= u + 1e-9,
            _ => true,
        }
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Which cut the divergences are taken against.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reference {
    /// Δ(ρ), dephasing every factor.
    Unassisted,
    /// Δ_B(ρ_AB) for the named factor.
    Assisted(String),
}

fn reference_state(rho: &DensityMatrix, which: &Reference) -> Result<ComplexMatrix> {
    match which {
        Reference::Unassisted => {
            let mut m = rho.matrix().clone();
            for l in rho.layout().labels() {
                m = dephase_operator(&m, rho.layout(), l)?;
            }
            Ok(m)
        }
        Reference::Assisted(b) => dephase_operator(rho.matrix(), rho.layout(), b),
    }
}

/// Smoothing schedule shrinking like 1/√n: η = (ε/2)/√n, δ = ½·min{(ε−η)²/3, 1−(ε−η)²}/√n.
pub fn smoothing_schedule(eps: f64, n: usize) -> (f64, f64) {
    let s = (n as f64).sqrt();
    let eta = 0.5 * eps / s;
    let g = (eps - eta).powi(2);
    (eta, 0.5 * (g / 3.0).min(1.0 - g) / s)
}

/// Both one-shot bounds on n-copy distillable coherence:
/// lower D_H^{(ε−η)²−2δ} − c, upper D_H^{ε²}, against Δ(ρ)^{⊗n}.
pub fn sandwich_check_unassisted(rho: &DensityMatrix, eps: f64, n: usize, eta: f64, delta: f64) -> Result<CurvePoint> {
    sandwich(rho, &Reference::Unassisted, eps, n, eta, delta, MAX_DIM)
}

/// Assisted analog: lower D_H^{ε²−2δ} − c, upper D_H^{ε²}, against Δ_B(ρ_AB)^{⊗n}.
pub fn sandwich_check_assisted(rho_ab: &DensityMatrix, b: &str, eps: f64, n: usize, delta: f64) -> Result<CurvePoint> {
    sandwich(rho_ab, &Reference::Assisted(b.into()), eps, n, 0.0, delta, MAX_DIM)
}

fn sandwich(rho: &DensityMatrix, which: &Reference, eps: f64, n: usize, eta: f64, delta: f64, max_dim: usize) -> Result<CurvePoint> {
    let reference = reference_state(rho, which)?;
    let t1 = theta_tensor_power(rho.matrix(), n)?;
    let t2 = theta_tensor_power(&reference, n)?;
    let (c, lower_level) = match which {
        Reference::Unassisted => (correction_from_theta_unassisted(t1, t2, eps, delta, eta)?, (eps - eta).powi(2) - 2.0 * delta),
        Reference::Assisted(_) => (correction_from_theta_assisted(t1, t2, eps, delta)?, eps * eps - 2.0 * delta),
    };
    let upper = iid_dh_with(rho.matrix(), &reference, n, eps * eps, max_dim)?;
    let lower = iid_dh_with(rho.matrix(), &reference, n, lower_level, max_dim)?;
    let mut p = CurvePoint::empty(n, eps);
    p.upper_bits = finite(upper.bits);
    p.exact_bits = finite(upper.bits);
    p.lower_bits = finite(lower.bits - c);
    if upper.bits.is_infinite() {
        p.flags.push("upper-infinite".into());
    }
    if !p.ordered() {
        return Err(Error::Numerical(format!("sandwich bounds out of order at n = {n}")));
    }
    Ok(p)
}

/// Per-n points with the exact value, both bounds (on the 1/√n smoothing
/// schedule) and the normal approximation nD + √(nV)Φ⁻¹(ε²). Points whose
/// exact value is beyond `max_dim` keep only the approximation.
pub fn second_order_curve(
    rho: &DensityMatrix,
    eps: f64,
    n_list: &[usize],
    which: &Reference,
    max_dim: usize,
    exec: Execution,
) -> Result<Vec<CurvePoint>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("ε must lie in (0,1), got {eps}")));
    }
    let reference = reference_state(rho, which)?;
    let d = rel_entropy(rho.matrix(), &reference)?;
    let v = rel_entropy_variance(rho.matrix(), &reference)?;
    let points = map_slice(n_list, exec, |&n| -> Result<CurvePoint> {
        let estimate = second_order_at_level(d, v, eps * eps, n)?;
        let (eta, delta) = smoothing_schedule(eps, n);
        let delta = if matches!(which, Reference::Assisted(_)) {
            0.5 * (eps * eps / 3.0).min(1.0 - eps * eps) / (n as f64).sqrt()
        } else {
            delta
        };
        let mut p = match sandwich(rho, which, eps, n, eta, delta, max_dim) {
            Ok(p) => p,
            Err(Error::Guard(_)) => {
                let mut p = CurvePoint::empty(n, eps);
                p.flags.push("exact-skipped".into());
                p
            }
            Err(e) => return Err(e),
        };
        p.second_order_bits = Some(estimate);
        Ok(p)
    });
    points.into_iter().collect()
}

/// n at which √(n/V)(R − C) first reaches Φ⁻¹(target²).
pub fn strong_converse_threshold_n(c: f64, v: f64, rate: f64, target: f64) -> Result<f64> {
    if rate <= c || v <= 0.0 {
        return Err(Error::Domain("threshold needs R > C and V > 0".into()));
    }
    let z = inv_normal_cdf(target * target)?;
    Ok(v * (z / (rate - c)).powi(2))
}

/// ε ≥ √Φ(√(n/V)(R − C)) with the O(log n) term dropped ("g-neglected").
/// With V = 0 the bound is a step in R − C ("degenerate-variance").
pub fn strong_converse_curve(rho: &DensityMatrix, rate: f64, n_list: &[usize]) -> Result<Vec<CurvePoint>> {
    let reference = reference_state(rho, &Reference::Unassisted)?;
    let c = rel_entropy(rho.matrix(), &reference)?;
    let v = rel_entropy_variance(rho.matrix(), &reference)?;
    n_list
        .iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::Domain("n must be at least 1".into()));
            }
            let mut p = CurvePoint::empty(n, f64::NAN);
            p.flags.push("g-neglected".into());
            let bound = if v > 1e-12 {
                normal_cdf((n as f64 / v).sqrt() * (rate - c)).sqrt()
            } else {
                p.flags.push("degenerate-variance".into());
                let gap = rate - c;
                if gap.abs() <= 1e-12 {
                    0.5f64.sqrt()
                } else if gap > 0.0 {
                    1.0
                } else {
                    0.0
                }
            };
            p.epsilon_lower_bound = Some(bound);
            Ok(p)
        })
        .collect()
}

/// Least-squares fit y ≈ Σ_j β_j f_j(x).
pub fn least_squares(xs: &[f64], ys: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Result<Vec<f64>> {
    let k = basis.len();
    if xs.len() != ys.len() || xs.len() < k {
        return Err(Error::Domain("not enough points for the fit".into()));
    }
    let a = nalgebra::DMatrix::from_fn(xs.len(), k, |i, j| basis[j](xs[i]));
    let y = nalgebra::DVector::from_column_slice(ys);
    let sol = a.svd(true, true).solve(&y, 1e-12).map_err(|e| Error::Numerical(e.to_string()))?;
    Ok(sol.iter().copied().collect())
}

/// CSV with a versioned header comment.
pub fn curve_csv(points: &[CurvePoint], version: &str) -> String {
    let fmt = |x: Option<f64>| x.map(|v| format!("{v:.12e}")).unwrap_or_default();
    let mut out = format!("# cohdist {version} curve v1\nn,eps,lower_bits,upper_bits,exact_bits,second_order_bits,eps_lower_bound\n");
    for p in points {
        let eps = if p.eps.is_nan() { String::new() } else { format!("{}", p.eps) };
        out += &format!(
            "{},{},{},{},{},{},{}\n",
            p.n,
            eps,
            fmt(p.lower_bits),
            fmt(p.upper_bits),
            fmt(p.exact_bits),
            fmt(p.second_order_bits),
            fmt(p.epsilon_lower_bound)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::mcs;
    use crate::entropy::dh;
    use crate::linalg::random::{random_density, rng_from_seed};
    use crate::linalg::SystemLayout;

    fn qubit(m: ComplexMatrix) -> DensityMatrix {
        DensityMatrix::new(m, SystemLayout::single("B", 2)).unwrap()
    }

    #[test]
    fn schur_weyl_matches_dense() {
        let mut rng = rng_from_seed(31);
        for n in 1..=6 {
            let rho = random_density(2, 2, &mut rng);
            let sigma = random_density(2, 2, &mut rng);
            for eps in [0.1, 0.5, 0.8] {
                let sw = dh_blocks(&schur_weyl_blocks(&rho, &sigma, n), eps).unwrap().value_bits;
                let dense = dh(&tensor_power(&rho, n), &tensor_power(&sigma, n), eps).unwrap().value_bits;
                assert!(sw == dense || (sw - dense).abs() < 1e-8, "n={n} eps={eps}: {sw} vs {dense}");
            }
        }
    }

    #[test]
    fn block_dimensions_add_up() {
        let rho = ComplexMatrix::identity(2);
        for n in 1..=7 {
            let total: f64 = schur_weyl_blocks(&rho, &rho, n).iter().map(|b| b.multiplicity * b.rho.rows() as f64).sum();
            assert_eq!(total, (1u64 << n) as f64);
        }
    }

    #[test]
    fn single_copy_equals_dh() {
        let mut rng = rng_from_seed(2);
        let rho = random_density(3, 3, &mut rng);
        let sigma = random_density(3, 3, &mut rng);
        let a = iid_dh(&rho, &sigma, 1, 0.3).unwrap();
        assert_eq!(a.method, IidMethod::Dense);
        assert!((a.bits - dh(&rho, &sigma, 0.3).unwrap().value_bits).abs() < 1e-12);
    }

    #[test]
    fn pure_plus_against_maximally_mixed() {
        let plus = mcs(2, "B").unwrap().density().into_matrix();
        let half = ComplexMatrix::identity(2).scale(0.5);
        for eps in [0.1, 0.4, 0.7] {
            let r = iid_dh(&plus, &half, 2, eps).unwrap();
            assert!((r.bits - (2.0 - (1.0 - eps).log2())).abs() < 1e-9);
        }
    }

    #[test]
    fn commuting_pair_uses_type_classes() {
        let mut rng = rng_from_seed(5);
        let p = crate::linalg::random::random_probabilities(2, &mut rng);
        let q = crate::linalg::random::random_probabilities(2, &mut rng);
        let rho = ComplexMatrix::diag_real(&p);
        let sigma = ComplexMatrix::diag_real(&q);
        let r = iid_dh(&rho, &sigma, 10, 0.25).unwrap();
        assert_eq!(r.method, IidMethod::Classical);
        let mut pn = vec![1.0];
        let mut qn = vec![1.0];
        for _ in 0..10 {
            pn = pn.iter().flat_map(|a| p.iter().map(move |b| a * b)).collect();
            qn = qn.iter().flat_map(|a| q.iter().map(move |b| a * b)).collect();
        }
        let oracle = crate::entropy::dh_classical(&pn, &qn, 0.25).unwrap();
        assert!((r.bits - oracle).abs() < 1e-9);
    }

    #[test]
    fn sandwich_orders_bounds() {
        let mut rng = rng_from_seed(9);
        let rho = qubit(random_density(2, 2, &mut rng));
        let (eta, delta) = smoothing_schedule(0.5, 6);
        let p = sandwich_check_unassisted(&rho, 0.5, 6, eta, delta).unwrap();
        assert!(p.ordered());
        assert!(p.lower_bits.unwrap() < p.upper_bits.unwrap());
    }

    #[test]
    fn diagonal_state_has_no_rate() {
        let rho = qubit(ComplexMatrix::diag_real(&[0.3, 0.7]));
        let pts = second_order_curve(&rho, 0.5, &[1, 4], &Reference::Unassisted, MAX_DIM, Execution::Sequential).unwrap();
        for p in pts {
            assert!(p.second_order_bits.unwrap().abs() < 1e-12);
            // D_H^{ε²}(ρ‖ρ) = −log(1−ε²) independent of n.
            assert!((p.upper_bits.unwrap() + (1.0f64 - 0.25).log2()).abs() < 1e-9);
        }
    }

    #[test]
    fn plus_state_estimate_is_n() {
        let plus = mcs(2, "B").unwrap().density();
        let pts = second_order_curve(&plus, 0.5f64.sqrt(), &[2, 3, 5], &Reference::Unassisted, MAX_DIM, Execution::Parallel).unwrap();
        for p in pts {
            assert!((p.second_order_bits.unwrap() - p.n as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn strong_converse_shapes() {
        let mut rng = rng_from_seed(14);
        let rho = qubit(random_density(2, 2, &mut rng));
        let r = reference_state(&rho, &Reference::Unassisted).unwrap();
        let c = rel_entropy(rho.matrix(), &r).unwrap();
        let at = strong_converse_curve(&rho, c, &[1, 10, 100]).unwrap();
        assert!(at.iter().all(|p| (p.epsilon_lower_bound.unwrap() - 0.5f64.sqrt()).abs() < 1e-12));
        let above = strong_converse_curve(&rho, c + 0.1, &[1, 10, 100, 1000]).unwrap();
        let vals: Vec<f64> = above.iter().map(|p| p.epsilon_lower_bound.unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
        let below = strong_converse_curve(&rho, c - 0.1, &[10, 1000]).unwrap();
        assert!(below[1].epsilon_lower_bound.unwrap() < below[0].epsilon_lower_bound.unwrap());
    }

    #[test]
    fn least_squares_recovers_coefficients() {
        let xs: Vec<f64> = (2..=10).map(|n| n as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&n| 1.5 * n.sqrt() - 0.25).collect();
        let beta = least_squares(&xs, &ys, &[&|n: f64| n.sqrt(), &|_| 1.0]).unwrap();
        assert!((beta[0] - 1.5).abs() < 1e-10 && (beta[1] + 0.25).abs() < 1e-10);
    }
}
