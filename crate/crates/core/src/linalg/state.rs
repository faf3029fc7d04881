//! Validated density matrices and pure states over labeled layouts.

use serde::{Deserialize, Serialize};

use super::layout::{self, SystemLayout};
use super::matrix::{kron, kron_vec, vec_norm, ComplexMatrix, C64, ZERO};
use super::random;
use super::spectral::eigh;
use crate::error::{Error, Result};

pub const DEFAULT_PSD_TOL: f64 = 1e-10;

/// Hermitian PSD unit-trace matrix over a layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    layout: SystemLayout,
    #[serde(default = "default_tol")]
    psd_tol: f64,
}

fn default_tol() -> f64 {
    DEFAULT_PSD_TOL
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix, layout: SystemLayout) -> Result<Self> {
        Self::with_tol(mat, layout, DEFAULT_PSD_TOL)
    }

    pub fn with_tol(mat: ComplexMatrix, layout: SystemLayout, psd_tol: f64) -> Result<Self> {
        if !mat.is_square() || mat.rows() != layout.dim() {
            return Err(Error::Layout(format!("{}x{} matrix vs layout dim {}", mat.rows(), mat.cols(), layout.dim())));
        }
        let defect = mat.hermiticity_defect();
        if defect > psd_tol {
            return Err(Error::Numerical(format!("state not Hermitian (defect {defect:.3e})")));
        }
        let mat = mat.hermitian_part();
        let tr = mat.trace().re;
        if (tr - 1.0).abs() > psd_tol {
            return Err(Error::Numerical(format!("state trace {tr} is not 1")));
        }
        let min = eigh(&mat)?.min();
        if min < -psd_tol {
            return Err(Error::Numerical(format!("state has negative eigenvalue {min:.3e}")));
        }
        Ok(DensityMatrix { mat, layout, psd_tol })
    }

    /// Single-factor state labeled `label`.
    pub fn from_matrix(mat: ComplexMatrix, label: &str) -> Result<Self> {
        let d = mat.rows();
        Self::new(mat, SystemLayout::new(vec![(label, d)])?)
    }

    pub fn from_pure(psi: &PureState) -> Self {
        DensityMatrix { mat: ComplexMatrix::projector(&psi.vec), layout: psi.layout.clone(), psd_tol: DEFAULT_PSD_TOL }
    }

    pub fn maximally_mixed(layout: SystemLayout) -> Self {
        let d = layout.dim();
        DensityMatrix { mat: ComplexMatrix::identity(d).scale(1.0 / d as f64), layout, psd_tol: DEFAULT_PSD_TOL }
    }

    /// Classical state with the given diagonal.
    pub fn diagonal(p: &[f64], label: &str) -> Result<Self> {
        Self::from_matrix(ComplexMatrix::diag_real(p), label)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn psd_tol(&self) -> f64 {
        self.psd_tol
    }

    pub fn with_layout(mut self, layout: SystemLayout) -> Result<Self> {
        if layout.dim() != self.dim() {
            return Err(Error::Layout("relabeled layout changes dimension".into()));
        }
        self.layout = layout;
        Ok(self)
    }

    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityMatrix> {
        let (m, l) = layout::partial_trace(&self.mat, &self.layout, keep)?;
        Ok(DensityMatrix { mat: m, layout: l, psd_tol: self.psd_tol })
    }

    pub fn permute(&self, order: &[&str]) -> Result<DensityMatrix> {
        let (m, l) = layout::permute_operator(&self.mat, &self.layout, order)?;
        Ok(DensityMatrix { mat: m, layout: l, psd_tol: self.psd_tol })
    }

    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(DensityMatrix {
            mat: kron(&self.mat, &other.mat),
            layout: self.layout.join(&other.layout)?,
            psd_tol: self.psd_tol.max(other.psd_tol),
        })
    }

    /// Rank with eigenvalue cutoff `1e-12`.
    pub fn rank(&self) -> Result<usize> {
        Ok(eigh(&self.mat)?.values.iter().filter(|&&x| x > PURIFY_CUTOFF).count())
    }
}

/// Eigenvalue cutoff fixing the purification's reference rank.
pub const PURIFY_CUTOFF: f64 = 1e-12;

/// Unit vector over a layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PureState {
    #[serde(with = "complex_vec")]
    vec: Vec<C64>,
    layout: SystemLayout,
}

impl PureState {
    pub fn new(vec: Vec<C64>, layout: SystemLayout) -> Result<Self> {
        if vec.len() != layout.dim() {
            return Err(Error::Layout(format!("vector length {} vs layout dim {}", vec.len(), layout.dim())));
        }
        let n = vec_norm(&vec);
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::Numerical(format!("pure state norm {n} is not 1")));
        }
        Ok(PureState { vec, layout })
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(vec: Vec<C64>, layout: SystemLayout) -> Result<Self> {
        let n = vec_norm(&vec);
        if n == 0.0 {
            return Err(Error::Numerical("zero vector".into()));
        }
        Self::new(vec.into_iter().map(|z| z / n).collect(), layout)
    }

    pub fn basis(index: usize, layout: SystemLayout) -> Result<Self> {
        let mut v = vec![ZERO; layout.dim()];
        if index >= v.len() {
            return Err(Error::Layout("basis index out of range".into()));
        }
        v[index] = C64::new(1.0, 0.0);
        Self::new(v, layout)
    }

    pub fn vector(&self) -> &[C64] {
        &self.vec
    }

    pub fn layout(&self) -> &SystemLayout {
        &self.layout
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        Ok(PureState { vec: kron_vec(&self.vec, &other.vec), layout: self.layout.join(&other.layout)? })
    }

    pub fn permute(&self, order: &[&str]) -> Result<PureState> {
        let (v, l) = layout::permute_vector(&self.vec, &self.layout, order)?;
        Ok(PureState { vec: v, layout: l })
    }

    pub fn with_layout(mut self, layout: SystemLayout) -> Result<Self> {
        if layout.dim() != self.vec.len() {
            return Err(Error::Layout("relabeled layout changes dimension".into()));
        }
        self.layout = layout;
        Ok(self)
    }
}

mod complex_vec {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
        v.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
        let raw: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(raw.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

/// Purification on `layout ⊗ ref_label` with reference dimension equal to the rank.
///
/// Eigenvectors are taken in descending eigenvalue order, each with its first
/// nonzero component made real-positive.
pub fn purify(rho: &DensityMatrix, ref_label: &str) -> Result<PureState> {
    let e = eigh(rho.matrix())?;
    let d = rho.dim();
    let kept: Vec<usize> = (0..d).rev().filter(|&k| e.values[k] > PURIFY_CUTOFF).collect();
    let r = kept.len().max(1);
    let layout = rho.layout().join(&SystemLayout::new(vec![(ref_label, r)])?)?;
    let mut vec = vec![ZERO; d * r];
    for (slot, &k) in kept.iter().enumerate() {
        let mut v = e.vector(k);
        if let Some(first) = v.iter().find(|z| z.norm() > 1e-12).copied() {
            let phase = first.conj() / first.norm();
            for z in v.iter_mut() {
                *z *= phase;
            }
        }
        let w = e.values[k].sqrt();
        for i in 0..d {
            vec[i * r + slot] = v[i] * w;
        }
    }
    PureState::normalized(vec, layout)
}

/// Haar-random pure state on a single factor labeled "B".
pub fn haar_random_state(dim: usize, seed: u64) -> Result<PureState> {
    let mut rng = random::rng_from_seed(seed);
    PureState::normalized(random::random_unit_vector(dim, &mut rng), SystemLayout::new(vec![("B", dim)])?)
}

/// Random mixed state of the given rank on a single factor labeled "B".
pub fn haar_random_density(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(Error::Domain(format!("rank {rank} must lie in 1..={dim}")));
    }
    let mut rng = random::rng_from_seed(seed);
    DensityMatrix::new(random::random_density(dim, rank, &mut rng), SystemLayout::new(vec![("B", dim)])?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn purify_pure_state_has_trivial_reference() {
        let rho = DensityMatrix::diagonal(&[1.0, 0.0], "B").unwrap();
        let psi = purify(&rho, "R").unwrap();
        assert_eq!(psi.layout().dim_of("R").unwrap(), 1);
        assert!((psi.vector()[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn purify_maximally_mixed_is_bell_like() {
        let rho = DensityMatrix::maximally_mixed(SystemLayout::single("B", 2));
        let psi = purify(&rho, "R").unwrap();
        let marg = psi.density().partial_trace(&["B"]).unwrap();
        assert!(marg.matrix().max_diff(rho.matrix()) < 1e-15);
        let other = psi.density().partial_trace(&["R"]).unwrap();
        assert!(other.matrix().max_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn purify_rank_three_qutrit() {
        let rho = haar_random_density(3, 3, 4).unwrap();
        let psi = purify(&rho, "R").unwrap();
        assert_eq!(psi.layout().dim_of("R").unwrap(), 3);
        let marg = psi.density().partial_trace(&["B"]).unwrap();
        assert!(marg.matrix().max_diff(rho.matrix()) <= 1e-10);
    }

    #[test]
    fn purify_rank_deficient() {
        let rho = haar_random_density(4, 2, 9).unwrap();
        let psi = purify(&rho, "R").unwrap();
        assert_eq!(psi.layout().dim_of("R").unwrap(), 2);
        let marg = psi.density().partial_trace(&["B"]).unwrap();
        assert!(marg.matrix().max_diff(rho.matrix()) <= 1e-10);
    }

    #[test]
    fn seeded_generation_is_deterministic() {
        assert_eq!(haar_random_state(4, 1).unwrap(), haar_random_state(4, 1).unwrap());
        assert_ne!(haar_random_state(4, 1).unwrap(), haar_random_state(4, 2).unwrap());
        let psi = haar_random_state(4, 3).unwrap();
        assert!((vec_norm(psi.vector()) - 1.0).abs() <= 1e-12);
        assert!(haar_random_density(2, 3, 0).is_err());
    }

    #[test]
    fn ensemble_mean_of_first_population() {
        // E⟨0|ρ|0⟩ = 1/d; five standard errors.
        let dim = 3;
        let samples = 10_000;
        let vals: Vec<f64> = (0..samples).map(|s| haar_random_density(dim, 2, s).unwrap().matrix()[(0, 0)].re).collect();
        let mean = vals.iter().sum::<f64>() / samples as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (samples - 1) as f64;
        let se = (var / samples as f64).sqrt();
        assert!((mean - 1.0 / dim as f64).abs() <= 5.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn rejects_invalid_states() {
        let l = SystemLayout::single("B", 2);
        assert!(DensityMatrix::new(ComplexMatrix::diag_real(&[0.7, 0.7]), l.clone()).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::diag_real(&[1.2, -0.2]), l.clone()).is_err());
        assert!(DensityMatrix::new(ComplexMatrix::diag_real(&[0.5, 0.5, 0.0]), l).is_err());
    }
}
