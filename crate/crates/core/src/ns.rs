//! Nussbaum–Szkoła distributions and the classical reductions built on them.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::entropy::relative::SUPPORT_TOL;
use crate::entropy::{correction_c_assisted, dh, ds_spectrum_sided};
use crate::error::{Error, Result};
use crate::linalg::spectral::{eigh, support_cutoff};
use crate::linalg::{dephase_operator, vec_inner, ComplexMatrix, DensityMatrix, PureState};
use crate::sdp::{hmin_smooth, Smoothing, SMOOTH_HMIN_MAX_DIM};

/// Sum tolerance for P (against 1) and Q (against tr σ).
pub const NS_SUM_TOL: f64 = 1e-10;
/// Entries below this are dropped from the sparse JSON form.
const SPARSE_ZERO: f64 = 0.0;

/// Nonnegative weights on pairs (x, y): x indexes eigenvectors of ρ and y those of σ,
/// both in ascending eigenvalue order.
#[derive(Clone, Debug, PartialEq)]
pub struct JointDistribution {
    x_len: usize,
    y_len: usize,
    weights: Vec<f64>,
}

impl JointDistribution {
    pub fn new(x_len: usize, y_len: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != x_len * y_len {
            return Err(Error::Dimension(format!("{} weights for a {x_len}x{y_len} table", weights.len())));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Domain("joint weights must be finite and nonnegative".into()));
        }
        Ok(JointDistribution { x_len, y_len, weights })
    }

    pub fn x_len(&self) -> usize {
        self.x_len
    }

    pub fn y_len(&self) -> usize {
        self.y_len
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.weights[x * self.y_len + y]
    }

    /// Row-major weights.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Marginal over y, indexed by x.
    pub fn x_marginal(&self) -> Vec<f64> {
        self.weights.chunks(self.y_len.max(1)).map(|row| row.iter().sum()).collect()
    }
}

impl Serialize for JointDistribution {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let map: BTreeMap<String, f64> = (0..self.x_len)
            .flat_map(|x| (0..self.y_len).map(move |y| (x, y)))
            .filter(|&(x, y)| self.get(x, y) > SPARSE_ZERO)
            .map(|(x, y)| (format!("({x},{y})"), self.get(x, y)))
            .collect();
        map.serialize(s)
    }
}

fn parse_key(k: &str) -> Option<(usize, usize)> {
    let inner = k.trim().strip_prefix('(')?.strip_suffix(')')?;
    let (a, b) = inner.split_once(',')?;
    Some((a.trim().parse().ok()?, b.trim().parse().ok()?))
}

impl<'de> Deserialize<'de> for JointDistribution {
    /// Table dimensions are inferred from the largest indices present.
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let map: BTreeMap<String, f64> = BTreeMap::deserialize(d)?;
        let mut entries = Vec::with_capacity(map.len());
        for (k, w) in map {
            let xy = parse_key(&k).ok_or_else(|| D::Error::custom(format!("bad pair key {k:?}")))?;
            entries.push((xy, w));
        }
        let x_len = entries.iter().map(|((x, _), _)| x + 1).max().unwrap_or(0);
        let y_len = entries.iter().map(|((_, y), _)| y + 1).max().unwrap_or(0);
        let mut weights = vec![0.0; x_len * y_len];
        for ((x, y), w) in entries {
            weights[x * y_len + y] = w;
        }
        JointDistribution::new(x_len, y_len, weights).map_err(D::Error::custom)
    }
}

/// Eigenvalues with the relative support cutoff applied, so that kernel directions
/// carry exactly zero weight.
fn clean_spectrum(values: &[f64]) -> Vec<f64> {
    let cut = support_cutoff(values);
    values.iter().map(|&v| if v > cut { v } else { 0.0 }).collect()
}

/// P(x,y) = r_x|⟨v_x|u_y⟩|² and Q(x,y) = s_y|⟨v_x|u_y⟩|² for ρ = Σr_x v_x and σ = Σs_y u_y.
pub fn ns_pair(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<(JointDistribution, JointDistribution)> {
    if rho.rows() != sigma.rows() || !rho.is_square() || !sigma.is_square() {
        return Err(Error::Dimension("NS pair needs equal square dimensions".into()));
    }
    let er = eigh(rho)?;
    let es = eigh(sigma)?;
    let r = clean_spectrum(&er.values);
    let s = clean_spectrum(&es.values);
    let d = rho.rows();
    let vs: Vec<_> = (0..d).map(|x| er.vector(x)).collect();
    let us: Vec<_> = (0..d).map(|y| es.vector(y)).collect();
    let mut p = vec![0.0; d * d];
    let mut q = vec![0.0; d * d];
    for x in 0..d {
        for y in 0..d {
            let overlap = vec_inner(&vs[x], &us[y]).norm_sqr();
            p[x * d + y] = r[x] * overlap;
            q[x * d + y] = s[y] * overlap;
        }
    }
    Ok((JointDistribution::new(d, d, p)?, JointDistribution::new(d, d, q)?))
}

/// Classical D(P‖Q) and V(P‖Q) in bits.
pub fn classical_d_v(p: &JointDistribution, q: &JointDistribution) -> Result<(f64, f64)> {
    classical_d_v_slices(p.weights(), q.weights())
}

pub fn classical_d_v_slices(p: &[f64], q: &[f64]) -> Result<(f64, f64)> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!("distributions of length {} and {}", p.len(), q.len())));
    }
    let mut terms = Vec::with_capacity(p.len());
    let mut outside = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            outside += a;
            continue;
        }
        terms.push((a, (a / b).log2()));
    }
    // Rounding leaves ~1e-30 weights on kernel pairs; same tolerance as the quantum side.
    if outside > SUPPORT_TOL {
        return Err(Error::InfiniteDivergence(format!("P has mass {outside:.3e} outside supp Q")));
    }
    let d: f64 = terms.iter().map(|(a, z)| a * z).sum();
    let v: f64 = terms.iter().map(|(a, z)| a * (z - d) * (z - d)).sum();
    Ok((d, v))
}

/// One ε point of the D_s identity. `residual` is `None` when either side sits on
/// an atom of its log-ratio distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumIdentityPoint {
    pub eps: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub at_atom: bool,
    pub residual: Option<f64>,
}

/// Outcome of the smooth min-entropy lower bound check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HminBoundCheck {
    pub eps: f64,
    pub delta: f64,
    pub hmin_bits: f64,
    pub dh_bits: f64,
    pub correction: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    /// Spectra of σ_R and ρ_AB, max difference.
    pub schmidt_residual: f64,
    pub spectrum_points: Vec<SpectrumIdentityPoint>,
    /// D(σ_BR‖1⊗σ_R).
    pub d_lhs: f64,
    /// −D(ρ_AB‖Δ_B ρ_AB).
    pub d_rhs: f64,
    pub d_residual: f64,
    pub v_lhs: f64,
    pub v_rhs: f64,
    pub v_residual: f64,
    /// `None` when σ_BR exceeds the smooth min-entropy guard.
    pub hmin_check: Option<HminBoundCheck>,
}

/// ε grid of the spectrum identity.
pub const SPECTRUM_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// The reduced operators of a pure state on (R, A, B) and its B-dephasing:
/// (σ_BR ordered as B⊗R, 1_B⊗σ_R, ρ_AB, Δ_B ρ_AB, σ_R).
pub struct DephasedReductions {
    pub sigma_br: DensityMatrix,
    pub id_sigma_r: ComplexMatrix,
    pub rho_ab: DensityMatrix,
    pub dephased_ab: ComplexMatrix,
    pub sigma_r: ComplexMatrix,
}

pub fn dephased_reductions(psi_rab: &PureState) -> Result<DephasedReductions> {
    let layout = psi_rab.layout();
    for label in ["R", "A", "B"] {
        if !layout.contains(label) {
            return Err(Error::Layout(format!("tripartite state needs factors R, A, B; got {:?}", layout.labels())));
        }
    }
    if layout.factors().len() != 3 {
        return Err(Error::Layout(format!("expected exactly R, A, B; got {:?}", layout.labels())));
    }
    let full = psi_rab.density();
    let sigma_rab = DensityMatrix::new(dephase_operator(full.matrix(), layout, "B")?, layout.clone())?;
    let sigma_br = sigma_rab.partial_trace(&["B", "R"])?.permute(&["B", "R"])?;
    let sigma_r = sigma_br.partial_trace(&["R"])?.into_matrix();
    let db = layout.dim_of("B")?;
    let id_sigma_r = crate::linalg::kron(&ComplexMatrix::identity(db), &sigma_r);
    let rho_ab = full.partial_trace(&["A", "B"])?.permute(&["A", "B"])?;
    let dephased_ab = dephase_operator(rho_ab.matrix(), rho_ab.layout(), "B")?;
    Ok(DephasedReductions { sigma_br, id_sigma_r, rho_ab, dephased_ab, sigma_r })
}

/// Evaluates the D_s, D and V identities between (σ_BR, 1⊗σ_R) and (ρ_AB, Δ_Bρ_AB)
/// for the B-dephasing σ of a pure state on (R, A, B), together with the lower bound
/// H_min^ε(B|R)_σ ≥ D_H^{ε²−2δ}(ρ_AB‖Δ_Bρ_AB) − c(ρ_AB, ε, δ).
pub fn verify_reduction_connections(psi_rab: &PureState, eps: f64, delta: f64) -> Result<ReductionReport> {
    crate::entropy::correction::check_assisted_params(eps, delta)?;
    let red = dephased_reductions(psi_rab)?;

    let mut sr = crate::linalg::eigvalsh(&red.sigma_r)?;
    let mut rab = crate::linalg::eigvalsh(red.rho_ab.matrix())?;
    sr.retain(|&x| x > 1e-12);
    rab.retain(|&x| x > 1e-12);
    let schmidt_residual = if sr.len() == rab.len() {
        sr.iter().rev().zip(rab.iter().rev()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };

    let (p1, q1) = ns_pair(red.sigma_br.matrix(), &red.id_sigma_r)?;
    let (p2, q2) = ns_pair(red.rho_ab.matrix(), &red.dephased_ab)?;

    let mut spectrum_points = Vec::with_capacity(SPECTRUM_GRID.len());
    for &e in &SPECTRUM_GRID {
        let l = ds_spectrum_sided(p1.weights(), q1.weights(), e)?;
        let r = ds_spectrum_sided(p2.weights(), q2.weights(), 1.0 - e)?;
        let at_atom = l.at_atom || r.at_atom;
        let rhs = -r.value;
        let residual = (!at_atom).then(|| if l.value == rhs { 0.0 } else { (l.value - rhs).abs() });
        spectrum_points.push(SpectrumIdentityPoint { eps: e, lhs: l.value, rhs, at_atom, residual });
    }

    let (d_lhs, v_lhs) = classical_d_v(&p1, &q1)?;
    let (d2, v_rhs) = classical_d_v(&p2, &q2)?;
    let d_rhs = -d2;

    let hmin_check = if red.sigma_br.dim() <= SMOOTH_HMIN_MAX_DIM {
        let hmin_bits = hmin_smooth(&red.sigma_br, "B", "R", eps, Smoothing::Subnormalized)?;
        let dh_bits = dh(red.rho_ab.matrix(), &red.dephased_ab, eps * eps - 2.0 * delta)?.value_bits;
        let correction = correction_c_assisted(&red.rho_ab, "B", eps, delta)?;
        let holds = hmin_bits + 1e-7 >= dh_bits - correction;
        Some(HminBoundCheck { eps, delta, hmin_bits, dh_bits, correction, holds })
    } else {
        None
    };

    Ok(ReductionReport {
        schmidt_residual,
        spectrum_points,
        d_lhs,
        d_rhs,
        d_residual: (d_lhs - d_rhs).abs(),
        v_lhs,
        v_rhs,
        v_residual: (v_lhs - v_rhs).abs(),
        hmin_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{rel_entropy, rel_entropy_variance};
    use crate::linalg::random::{random_density, random_unit_vector, rng_from_seed};
    use crate::linalg::{SystemLayout, C64};

    fn plus() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.5, 0.5], &[0.5, 0.5]])
    }

    fn random_rab(seed: u64) -> PureState {
        let layout = SystemLayout::new(vec![("R", 2), ("A", 2), ("B", 2)]).unwrap();
        PureState::normalized(random_unit_vector(8, &mut rng_from_seed(seed)), layout).unwrap()
    }

    #[test]
    fn commuting_pair_is_diagonal() {
        let rho = ComplexMatrix::diag_real(&[0.2, 0.8]);
        let sigma = ComplexMatrix::diag_real(&[0.6, 0.4]);
        let (p, q) = ns_pair(&rho, &sigma).unwrap();
        // Ascending eigenvalue order: ρ's x=0 is |0⟩, σ's y=0 is |1⟩.
        assert!((p.get(0, 1) - 0.2).abs() < 1e-15 && (p.get(1, 0) - 0.8).abs() < 1e-15);
        assert!(p.get(0, 0).abs() < 1e-15 && p.get(1, 1).abs() < 1e-15);
        assert!((q.get(0, 1) - 0.6).abs() < 1e-15 && (q.get(1, 0) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn plus_against_maximally_mixed() {
        let (p, q) = ns_pair(&plus(), &ComplexMatrix::identity(2).scale(0.5)).unwrap();
        // x = 1 is the |+⟩ eigenvector.
        assert!((p.get(1, 0) - 0.5).abs() < 1e-12 && (p.get(1, 1) - 0.5).abs() < 1e-12);
        assert!(p.get(0, 0).abs() < 1e-12 && p.get(0, 1).abs() < 1e-12);
        assert!(q.weights().iter().all(|w| (w - 0.25).abs() < 1e-12));
    }

    #[test]
    fn reproduces_quantum_d_and_v() {
        let mut rng = rng_from_seed(7);
        for _ in 0..20 {
            let rho = random_density(3, 3, &mut rng);
            let sigma = random_density(3, 3, &mut rng);
            let (p, q) = ns_pair(&rho, &sigma).unwrap();
            assert!((p.total() - 1.0).abs() < NS_SUM_TOL && (q.total() - 1.0).abs() < NS_SUM_TOL);
            let (d, v) = classical_d_v(&p, &q).unwrap();
            assert!((d - rel_entropy(&rho, &sigma).unwrap()).abs() < 1e-8);
            assert!((v - rel_entropy_variance(&rho, &sigma).unwrap()).abs() < 1e-8);
            let eigs = crate::linalg::eigvalsh(&rho).unwrap();
            for (a, b) in p.x_marginal().iter().zip(&eigs) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn classical_examples() {
        let p = JointDistribution::new(1, 2, vec![1.0, 0.0]).unwrap();
        let q = JointDistribution::new(1, 2, vec![0.5, 0.5]).unwrap();
        assert_eq!(classical_d_v(&p, &q).unwrap(), (1.0, 0.0));
        assert_eq!(classical_d_v(&q, &q).unwrap(), (0.0, 0.0));
        assert!(matches!(classical_d_v(&q, &p), Err(Error::InfiniteDivergence(_))));
    }

    #[test]
    fn sparse_json_round_trip() {
        let (p, _) = ns_pair(&plus(), &ComplexMatrix::identity(2).scale(0.5)).unwrap();
        let json = serde_json::to_value(&p).unwrap();
        assert!(json.get("(1,0)").is_some());
        let back: JointDistribution = serde_json::from_value(json).unwrap();
        assert!((back.get(1, 1) - p.get(1, 1)).abs() < 1e-15);
        assert!(serde_json::from_str::<JointDistribution>(r#"{"1,0": 0.5}"#).is_err());
    }

    #[test]
    fn identities_on_random_states() {
        for seed in 0..5 {
            let r = verify_reduction_connections(&random_rab(seed), 0.6, 0.02).unwrap();
            assert!(r.schmidt_residual < 1e-10);
            assert!(r.d_residual < 1e-8 && r.v_residual < 1e-8, "{r:?}");
            for pt in &r.spectrum_points {
                if let Some(res) = pt.residual {
                    assert!(res < 1e-8, "{pt:?}");
                }
            }
            assert!(r.hmin_check.as_ref().unwrap().holds);
        }
    }

    #[test]
    fn product_state_gives_coherence_of_ab() {
        let mut rng = rng_from_seed(3);
        let r = PureState::normalized(random_unit_vector(2, &mut rng), SystemLayout::single("R", 2)).unwrap();
        let ab = PureState::normalized(random_unit_vector(4, &mut rng), SystemLayout::bipartite("A", 2, "B", 2).unwrap())
            .unwrap();
        let psi = r.tensor(&ab).unwrap();
        let rep = verify_reduction_connections(&psi, 0.6, 0.02).unwrap();
        let rho_ab = ab.density();
        let deph = dephase_operator(rho_ab.matrix(), rho_ab.layout(), "B").unwrap();
        let want = rel_entropy(rho_ab.matrix(), &deph).unwrap();
        assert!((rep.d_lhs + want).abs() < 1e-8 && (rep.d_rhs + want).abs() < 1e-8);
    }

    #[test]
    fn rejects_wrong_layout() {
        let psi = PureState::normalized(vec![C64::new(1.0, 0.0); 4], SystemLayout::bipartite("A", 2, "B", 2).unwrap())
            .unwrap();
        assert!(matches!(verify_reduction_connections(&psi, 0.6, 0.02), Err(Error::Layout(_))));
    }
}
