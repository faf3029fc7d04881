//! Kraus channels, Choi matrices and product-form Kraus witnesses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{embed_operator, kron, ComplexMatrix, DensityMatrix, SystemLayout, C64, ONE, ZERO};

/// Completeness tolerance for Σ K†K = I.
pub const COMPLETENESS_TOL: f64 = 1e-10;

/// Product-form Kraus decomposition {Aᵢ ⊗ Bᵢ} of a bipartite channel. The first
/// factor of the channel's input and output layouts is Alice's.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProductWitness {
    pub terms: Vec<(ComplexMatrix, ComplexMatrix)>,
}

impl ProductWitness {
    pub fn kraus(&self) -> Vec<ComplexMatrix> {
        self.terms.iter().map(|(a, b)| kron(a, b)).collect()
    }
}

/// Channel in Kraus form between labeled layouts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrausChannel {
    kraus: Vec<ComplexMatrix>,
    in_layout: SystemLayout,
    out_layout: SystemLayout,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    witness: Option<ProductWitness>,
}

impl KrausChannel {
    pub fn new(kraus: Vec<ComplexMatrix>, in_layout: SystemLayout, out_layout: SystemLayout) -> Result<Self> {
        let ch = KrausChannel { kraus, in_layout, out_layout, witness: None };
        ch.validate()?;
        Ok(ch)
    }

    /// Channel whose Kraus operators are the products of the witness.
    pub fn from_witness(witness: ProductWitness, in_layout: SystemLayout, out_layout: SystemLayout) -> Result<Self> {
        let mut ch = KrausChannel::new(witness.kraus(), in_layout, out_layout)?;
        ch.witness = Some(witness);
        Ok(ch)
    }

    /// Checks operator shapes and trace preservation; used after deserialization too.
    pub fn validate(&self) -> Result<()> {
        if self.kraus.is_empty() {
            return Err(Error::Domain("channel needs at least one Kraus operator".into()));
        }
        let (din, dout) = (self.in_layout.dim(), self.out_layout.dim());
        for k in &self.kraus {
            if k.rows() != dout || k.cols() != din {
                return Err(Error::Layout(format!("Kraus operator {}x{} for a {din}→{dout} channel", k.rows(), k.cols())));
            }
        }
        let defect = self.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(Error::Numerical(format!("Kraus completeness defect {defect:.3e}")));
        }
        if let Some(w) = &self.witness {
            let (ia, oa) = (self.in_layout.factors()[0].1, self.out_layout.factors()[0].1);
            for (a, b) in &w.terms {
                if a.cols() != ia || a.rows() != oa || a.cols() * b.cols() != din || a.rows() * b.rows() != dout {
                    return Err(Error::Witness("product witness does not match the channel layouts".into()));
                }
            }
        }
        Ok(())
    }

    pub fn identity(layout: SystemLayout) -> Self {
        let d = layout.dim();
        KrausChannel { kraus: vec![ComplexMatrix::identity(d)], in_layout: layout.clone(), out_layout: layout, witness: None }
    }

    pub fn unitary(u: ComplexMatrix, layout: SystemLayout) -> Result<Self> {
        KrausChannel::new(vec![u], layout.clone(), layout)
    }

    /// Δ on the factor `label` (identity elsewhere), Kraus operators |b⟩⟨b| ⊗ 1.
    pub fn dephasing(layout: SystemLayout, label: &str) -> Result<Self> {
        let d = layout.dim_of(label)?;
        let kraus = (0..d)
            .map(|b| {
                let mut p = ComplexMatrix::zeros(d, d);
                p[(b, b)] = ONE;
                embed_operator(&p, &layout, label).map(|(m, _)| m)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(KrausChannel { kraus, in_layout: layout.clone(), out_layout: layout, witness: None })
    }

    /// Full dephasing of every factor.
    pub fn full_dephasing(layout: SystemLayout) -> Self {
        let d = layout.dim();
        let kraus = (0..d)
            .map(|b| {
                let mut p = ComplexMatrix::zeros(d, d);
                p[(b, b)] = ONE;
                p
            })
            .collect();
        KrausChannel { kraus, in_layout: layout.clone(), out_layout: layout, witness: None }
    }

    /// Partial trace keeping `keep` (in layout order).
    pub fn partial_trace(layout: SystemLayout, keep: &[&str]) -> Result<Self> {
        let kept = layout.restrict(keep)?;
        let traced: Vec<&str> = layout.labels().into_iter().filter(|l| !keep.contains(l)).collect();
        let traced_layout = layout.restrict(&traced)?;
        let mut kraus = Vec::with_capacity(traced_layout.dim());
        for t in 0..traced_layout.dim() {
            let tdig = traced_layout.digits(t);
            let mut k = ComplexMatrix::zeros(kept.dim(), layout.dim());
            for col in 0..layout.dim() {
                let dig = layout.digits(col);
                let matches = traced.iter().zip(&tdig).all(|(l, &v)| dig[layout.position(l).unwrap()] == v);
                if matches {
                    let kd: Vec<usize> = keep.iter().map(|l| dig[layout.position(l).unwrap()]).collect();
                    k[(kept.flat_index(&kd), col)] = ONE;
                }
            }
            kraus.push(k);
        }
        KrausChannel::new(kraus, layout, kept)
    }

    /// Lifts a channel on one factor of `layout` to the whole layout. The factor
    /// keeps its position and takes the label of the channel's single output factor.
    pub fn on_factor(&self, layout: &SystemLayout, label: &str) -> Result<Self> {
        if self.in_layout.factors().len() != 1 || self.out_layout.factors().len() != 1 {
            return Err(Error::Layout("on_factor needs a single-factor channel".into()));
        }
        let mut out_layout = None;
        let mut kraus = Vec::with_capacity(self.kraus.len());
        for k in &self.kraus {
            let (m, l) = embed_operator(k, layout, label)?;
            kraus.push(m);
            out_layout = Some(l);
        }
        let out_layout = out_layout.unwrap().relabel(label, self.out_layout.labels()[0])?;
        KrausChannel::new(kraus, layout.clone(), out_layout)
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn in_layout(&self) -> &SystemLayout {
        &self.in_layout
    }

    pub fn out_layout(&self) -> &SystemLayout {
        &self.out_layout
    }

    pub fn witness(&self) -> Option<&ProductWitness> {
        self.witness.as_ref()
    }

    pub fn in_dim(&self) -> usize {
        self.in_layout.dim()
    }

    pub fn out_dim(&self) -> usize {
        self.out_layout.dim()
    }

    /// ‖Σ K†K − I‖_max.
    pub fn completeness_defect(&self) -> f64 {
        let d = self.in_dim();
        let mut acc = ComplexMatrix::zeros(d, d);
        for k in &self.kraus {
            acc += &k.adjoint().matmul(k);
        }
        acc.max_diff(&ComplexMatrix::identity(d))
    }

    /// Λ(X) = Σ K X K†.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.rows() != self.in_dim() || x.cols() != self.in_dim() {
            return Err(Error::Dimension(format!("{}x{} input to a channel on dimension {}", x.rows(), x.cols(), self.in_dim())));
        }
        let mut out = ComplexMatrix::zeros(self.out_dim(), self.out_dim());
        for k in &self.kraus {
            out += &k.matmul(x).matmul(&k.adjoint());
        }
        Ok(out)
    }

    pub fn apply_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.layout() != &self.in_layout {
            return Err(Error::Layout(format!("state layout {:?} vs channel input {:?}", rho.layout().labels(), self.in_layout.labels())));
        }
        DensityMatrix::with_tol(self.apply(rho.matrix())?, self.out_layout.clone(), rho.psd_tol().max(1e-9))
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &KrausChannel) -> Result<Self> {
        if next.in_layout.dim() != self.out_layout.dim() {
            return Err(Error::Layout("composition dimension mismatch".into()));
        }
        let kraus = next.kraus.iter().flat_map(|b| self.kraus.iter().map(move |a| b.matmul(a))).collect();
        KrausChannel::new(kraus, self.in_layout.clone(), next.out_layout.clone())
    }

    /// `self ⊗ other` on the joined layouts.
    pub fn tensor(&self, other: &KrausChannel) -> Result<Self> {
        let kraus = self.kraus.iter().flat_map(|a| other.kraus.iter().map(move |b| kron(a, b))).collect();
        KrausChannel::new(kraus, self.in_layout.join(&other.in_layout)?, self.out_layout.join(&other.out_layout)?)
    }

    pub fn with_out_layout(mut self, layout: SystemLayout) -> Result<Self> {
        if layout.dim() != self.out_dim() {
            return Err(Error::Layout("relabeled output changes dimension".into()));
        }
        self.out_layout = layout;
        Ok(self)
    }

    pub fn with_in_layout(mut self, layout: SystemLayout) -> Result<Self> {
        if layout.dim() != self.in_dim() {
            return Err(Error::Layout("relabeled input changes dimension".into()));
        }
        self.in_layout = layout;
        Ok(self)
    }

    pub fn choi(&self) -> ChoiMatrix {
        ChoiMatrix::from_kraus(&self.kraus, self.in_dim(), self.out_dim())
    }
}

/// J(Λ) = Σ_{ij} |i⟩⟨j| ⊗ Λ(|i⟩⟨j|) on in ⊗ out.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoiMatrix {
    pub mat: ComplexMatrix,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl ChoiMatrix {
    pub fn from_kraus(kraus: &[ComplexMatrix], in_dim: usize, out_dim: usize) -> Self {
        let n = in_dim * out_dim;
        let mut mat = ComplexMatrix::zeros(n, n);
        for k in kraus {
            // Column (i,a) of vec(K) is K[a,i].
            let v: Vec<C64> = (0..n).map(|idx| k[(idx % out_dim, idx / out_dim)]).collect();
            for r in 0..n {
                if v[r] == ZERO {
                    continue;
                }
                for c in 0..n {
                    mat[(r, c)] += v[r] * v[c].conj();
                }
            }
        }
        ChoiMatrix { mat, in_dim, out_dim }
    }

    /// Choi matrix of an arbitrary linear map given by its action on matrix units.
    pub fn from_map(in_dim: usize, out_dim: usize, map: impl Fn(&ComplexMatrix) -> Result<ComplexMatrix>) -> Result<Self> {
        let mut mat = ComplexMatrix::zeros(in_dim * out_dim, in_dim * out_dim);
        for i in 0..in_dim {
            for j in 0..in_dim {
                let mut e = ComplexMatrix::zeros(in_dim, in_dim);
                e[(i, j)] = ONE;
                mat.set_block(i * out_dim, j * out_dim, &map(&e)?);
            }
        }
        Ok(ChoiMatrix { mat, in_dim, out_dim })
    }

    pub fn frobenius_distance(&self, other: &ChoiMatrix) -> f64 {
        (&self.mat - &other.mat).frobenius_norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{random_density, random_kraus, rng_from_seed};

    fn qubit(label: &str) -> SystemLayout {
        SystemLayout::single(label, 2)
    }

    #[test]
    fn choi_paths_agree() {
        let mut rng = rng_from_seed(1);
        let k = random_kraus(2, 3, 2, &mut rng);
        let ch = KrausChannel::new(k, qubit("B"), SystemLayout::single("C", 3)).unwrap();
        let j = ch.choi();
        let j2 = ChoiMatrix::from_map(2, 3, |x| ch.apply(x)).unwrap();
        assert!(j.frobenius_distance(&j2) < 1e-12);
        let (pt, _) = crate::linalg::partial_trace(
            &j.mat,
            &SystemLayout::bipartite("in", 2, "out", 3).unwrap(),
            &["in"],
        )
        .unwrap();
        assert!(pt.max_diff(&ComplexMatrix::identity(2)) < 1e-12);
    }

    #[test]
    fn rejects_incomplete_kraus() {
        let k = vec![ComplexMatrix::identity(2).scale(0.9)];
        assert!(KrausChannel::new(k, qubit("B"), qubit("B")).is_err());
    }

    #[test]
    fn partial_trace_channel_matches_linalg() {
        let layout = SystemLayout::bipartite("A", 2, "B", 3).unwrap();
        let rho = random_density(6, 6, &mut rng_from_seed(2));
        let ch = KrausChannel::partial_trace(layout.clone(), &["B"]).unwrap();
        let (want, _) = crate::linalg::partial_trace(&rho, &layout, &["B"]).unwrap();
        assert!(ch.apply(&rho).unwrap().max_diff(&want) < 1e-12);
    }

    #[test]
    fn dephasing_on_factor() {
        let layout = SystemLayout::bipartite("A", 2, "B", 2).unwrap();
        let rho = random_density(4, 4, &mut rng_from_seed(3));
        let ch = KrausChannel::dephasing(layout.clone(), "B").unwrap();
        let want = crate::linalg::dephase_operator(&rho, &layout, "B").unwrap();
        assert!(ch.apply(&rho).unwrap().max_diff(&want) < 1e-14);
    }

    #[test]
    fn json_round_trip() {
        let ch = KrausChannel::dephasing(qubit("B"), "B").unwrap();
        let s = serde_json::to_string(&ch).unwrap();
        assert!(s.contains("\"kraus\"") && s.contains("\"in_layout\"") && !s.contains("witness"));
        let back: KrausChannel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, ch);
    }
}
