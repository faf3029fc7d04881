//! Membership certificates for the incoherent operation classes.
//!
//! Superoperator identities are checked on Choi matrices. IO (and hence DIIO,
//! SI and SQI) verdicts are relative to the Kraus decomposition supplied.

use serde::{Deserialize, Serialize};

use super::channel::{ChoiMatrix, KrausChannel, COMPLETENESS_TOL};
use crate::error::{Error, Result};
use crate::linalg::{dephase_operator, ComplexMatrix, SystemLayout, ONE};

/// Entries with modulus above this count as nonzero in a Kraus column.
pub const KRAUS_ENTRY_TOL: f64 = 1e-10;
/// Tolerance of diagonal-output and Choi-identity checks.
pub const CHOI_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoherenceClass {
    #[serde(rename = "MIO")]
    Mio,
    #[serde(rename = "DIO")]
    Dio,
    #[serde(rename = "IO")]
    Io,
    #[serde(rename = "DIIO")]
    Diio,
    #[serde(rename = "QIP")]
    Qip,
    #[serde(rename = "SI_kraus")]
    SiKraus,
    #[serde(rename = "SQI_kraus")]
    SqiKraus,
    #[serde(rename = "LICC")]
    Licc,
    #[serde(rename = "LQICC")]
    Lqicc,
}

/// A named residual and the tolerance it was held to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub name: String,
    pub value: f64,
    pub tol: f64,
}

impl Residual {
    pub(crate) fn new(name: &str, value: f64, tol: f64) -> Self {
        Residual { name: name.into(), value, tol }
    }

    pub fn passes(&self) -> bool {
        self.value <= self.tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassCertificate {
    pub class_name: CoherenceClass,
    pub verdict: bool,
    /// True when the verdict only covers the supplied Kraus decomposition.
    pub given_decomposition: bool,
    pub residuals: Vec<Residual>,
    /// First offending basis element or Kraus operator, if any.
    pub offending: Option<String>,
}

impl ClassCertificate {
    pub(crate) fn from_residuals(class_name: CoherenceClass, given_decomposition: bool, residuals: Vec<Residual>, offending: Option<String>) -> Self {
        let verdict = residuals.iter().all(Residual::passes) && offending.is_none();
        ClassCertificate { class_name, verdict, given_decomposition, residuals, offending }
    }
}

/// Largest off-diagonal modulus.
fn off_diagonal(m: &ComplexMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if i != j {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

/// True iff every column has at most one entry with modulus above [`KRAUS_ENTRY_TOL`].
pub fn is_incoherent_kraus_op(k: &ComplexMatrix) -> bool {
    offending_column(k).is_none()
}

fn offending_column(k: &ComplexMatrix) -> Option<usize> {
    (0..k.cols()).find(|&j| (0..k.rows()).filter(|&i| k[(i, j)].norm() > KRAUS_ENTRY_TOL).count() > 1)
}

/// Λ(|b⟩⟨b|) diagonal for every input basis element b.
pub fn check_mio(ch: &KrausChannel) -> Result<ClassCertificate> {
    let d = ch.in_dim();
    let mut worst: f64 = 0.0;
    let mut offending = None;
    for b in 0..d {
        let mut e = ComplexMatrix::zeros(d, d);
        e[(b, b)] = ONE;
        let r = off_diagonal(&ch.apply(&e)?);
        if r > CHOI_TOL && offending.is_none() {
            offending = Some(format!("basis element {b}"));
        }
        worst = worst.max(r);
    }
    Ok(ClassCertificate::from_residuals(
        CoherenceClass::Mio,
        false,
        vec![Residual::new("max off-diagonal of Λ(|b⟩⟨b|)", worst, CHOI_TOL)],
        offending,
    ))
}

fn full_dephase(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| if i == j { m[(i, j)] } else { crate::linalg::ZERO })
}

/// ‖J(Δ∘Λ) − J(Λ∘Δ)‖_F.
pub fn dio_residual(ch: &KrausChannel) -> Result<f64> {
    let (din, dout) = (ch.in_dim(), ch.out_dim());
    let left = ChoiMatrix::from_map(din, dout, |x| Ok(full_dephase(&ch.apply(x)?)))?;
    let right = ChoiMatrix::from_map(din, dout, |x| ch.apply(&full_dephase(x)))?;
    Ok(left.frobenius_distance(&right))
}

pub fn check_dio(ch: &KrausChannel) -> Result<ClassCertificate> {
    Ok(ClassCertificate::from_residuals(
        CoherenceClass::Dio,
        false,
        vec![Residual::new("‖J(Δ∘Λ) − J(Λ∘Δ)‖_F", dio_residual(ch)?, CHOI_TOL)],
        None,
    ))
}

fn kraus_offender(ops: &[ComplexMatrix], what: &str) -> Option<String> {
    ops.iter()
        .enumerate()
        .find_map(|(i, k)| offending_column(k).map(|c| format!("{what} {i}, column {c}")))
}

/// IO membership relative to the channel's own Kraus operators.
pub fn check_io_given_kraus(ch: &KrausChannel) -> Result<ClassCertificate> {
    let offending = kraus_offender(ch.kraus(), "Kraus operator");
    Ok(ClassCertificate::from_residuals(
        CoherenceClass::Io,
        true,
        vec![Residual::new("completeness", ch.completeness_defect(), COMPLETENESS_TOL)],
        offending,
    ))
}

pub fn check_diio(ch: &KrausChannel) -> Result<ClassCertificate> {
    let io = check_io_given_kraus(ch)?;
    let dio = check_dio(ch)?;
    let mut residuals = io.residuals;
    residuals.extend(dio.residuals);
    Ok(ClassCertificate::from_residuals(CoherenceClass::Diio, true, residuals, io.offending))
}

/// QIP check: ‖J(Λ∘(id⊗Δ_B)) − J((id⊗Δ_B')∘Λ∘(id⊗Δ_B))‖_F with `b_in` dephased on the
/// input and every label of `b_out` dephased on the output.
pub fn check_qip(ch: &KrausChannel, b_in: &str, b_out: &[&str]) -> Result<ClassCertificate> {
    let (inl, outl) = (ch.in_layout().clone(), ch.out_layout().clone());
    inl.position(b_in)?;
    for l in b_out {
        outl.position(l)?;
    }
    let deph_out = |m: &ComplexMatrix| -> Result<ComplexMatrix> {
        let mut m = m.clone();
        for l in b_out {
            m = dephase_operator(&m, &outl, l)?;
        }
        Ok(m)
    };
    let (din, dout) = (ch.in_dim(), ch.out_dim());
    let left = ChoiMatrix::from_map(din, dout, |x| ch.apply(&dephase_operator(x, &inl, b_in)?))?;
    let right = ChoiMatrix::from_map(din, dout, |x| deph_out(&ch.apply(&dephase_operator(x, &inl, b_in)?)?))?;
    Ok(ClassCertificate::from_residuals(
        CoherenceClass::Qip,
        false,
        vec![Residual::new("‖J(Λ∘Δ_B) − J(Δ_B'∘Λ∘Δ_B)‖_F", left.frobenius_distance(&right), CHOI_TOL)],
        None,
    ))
}

fn check_product(ch: &KrausChannel, class: CoherenceClass) -> Result<ClassCertificate> {
    let w = ch.witness().ok_or_else(|| Error::Witness("channel carries no product-form witness".into()))?;
    let kraus = w.kraus();
    let d = ch.in_dim();
    let mut acc = ComplexMatrix::zeros(d, d);
    for k in &kraus {
        acc += &k.adjoint().matmul(k);
    }
    let completeness = acc.max_diff(&ComplexMatrix::identity(d));
    let witness_choi = ChoiMatrix::from_kraus(&kraus, d, ch.out_dim());
    let agreement = witness_choi.frobenius_distance(&ch.choi());
    let bobs: Vec<ComplexMatrix> = w.terms.iter().map(|(_, b)| b.clone()).collect();
    let mut offending = kraus_offender(&bobs, "B factor");
    if class == CoherenceClass::SiKraus && offending.is_none() {
        let alices: Vec<ComplexMatrix> = w.terms.iter().map(|(a, _)| a.clone()).collect();
        offending = kraus_offender(&alices, "A factor");
    }
    Ok(ClassCertificate::from_residuals(
        class,
        true,
        vec![
            Residual::new("witness completeness", completeness, COMPLETENESS_TOL),
            Residual::new("‖J(witness) − J(Λ)‖_F", agreement, CHOI_TOL),
        ],
        offending,
    ))
}

/// SQI: all Bob factors incoherent.
pub fn check_sqi_kraus(ch: &KrausChannel) -> Result<ClassCertificate> {
    check_product(ch, CoherenceClass::SqiKraus)
}

/// SI: all Alice and Bob factors incoherent.
pub fn check_si_kraus(ch: &KrausChannel) -> Result<ClassCertificate> {
    check_product(ch, CoherenceClass::SiKraus)
}

/// U = Σ_b e^{iθ_b}|g(b)⟩⟨b| on a single factor.
pub fn incoherent_unitary(perm: &[usize], phases: &[f64], label: &str) -> Result<KrausChannel> {
    let d = perm.len();
    if phases.len() != d {
        return Err(Error::Dimension(format!("{} phases for a permutation of {d}", phases.len())));
    }
    let mut seen = vec![false; d];
    for &g in perm {
        if g >= d || std::mem::replace(&mut seen[g], true) {
            return Err(Error::Domain(format!("{perm:?} is not a permutation")));
        }
    }
    let mut u = ComplexMatrix::zeros(d, d);
    for (b, (&g, &t)) in perm.iter().zip(phases).enumerate() {
        u[(g, b)] = crate::linalg::C64::from_polar(1.0, t);
    }
    KrausChannel::unitary(u, SystemLayout::single(label, d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherence::channel::ProductWitness;
    use crate::linalg::random::{random_kraus, rng_from_seed};
    use crate::linalg::C64;

    fn hadamard() -> ComplexMatrix {
        let s = 0.5f64.sqrt();
        ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]])
    }

    fn q(label: &str) -> SystemLayout {
        SystemLayout::single(label, 2)
    }

    #[test]
    fn kraus_predicate() {
        assert!(is_incoherent_kraus_op(&ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])));
        assert!(!is_incoherent_kraus_op(&hadamard()));
        assert!(is_incoherent_kraus_op(&ComplexMatrix::zeros(2, 2)));
    }

    #[test]
    fn dephasing_is_in_every_class() {
        let d = KrausChannel::full_dephasing(q("B"));
        for cert in [check_mio(&d), check_dio(&d), check_io_given_kraus(&d), check_diio(&d)] {
            assert!(cert.unwrap().verdict);
        }
    }

    #[test]
    fn hadamard_is_in_none() {
        let h = KrausChannel::unitary(hadamard(), q("B")).unwrap();
        let mio = check_mio(&h).unwrap();
        assert!(!mio.verdict && mio.offending.is_some());
        assert!(!check_dio(&h).unwrap().verdict);
        assert!(!check_io_given_kraus(&h).unwrap().verdict);
        assert!(!check_diio(&h).unwrap().verdict);
    }

    #[test]
    fn replacer_to_maximally_mixed_is_dio() {
        // Kraus operators |a⟩⟨b|/√2.
        let kraus = (0..4)
            .map(|k| {
                let mut m = ComplexMatrix::zeros(2, 2);
                m[(k / 2, k % 2)] = C64::new(0.5f64.sqrt(), 0.0);
                m
            })
            .collect();
        let ch = KrausChannel::new(kraus, q("B"), q("B")).unwrap();
        assert!(check_mio(&ch).unwrap().verdict && check_dio(&ch).unwrap().verdict);
    }

    #[test]
    fn generic_channel_is_not_dio() {
        let ch = KrausChannel::new(random_kraus(2, 2, 2, &mut rng_from_seed(4)), q("B"), q("B")).unwrap();
        assert!(!check_dio(&ch).unwrap().verdict);
    }

    #[test]
    fn qip_examples() {
        let ab = SystemLayout::bipartite("A", 2, "B", 2).unwrap();
        let deph = KrausChannel::dephasing(ab.clone(), "B").unwrap();
        assert!(check_qip(&deph, "B", &["B"]).unwrap().verdict);
        let mut swap = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                swap[(j * 2 + i, i * 2 + j)] = ONE;
            }
        }
        let sw = KrausChannel::unitary(swap, ab).unwrap();
        assert!(!check_qip(&sw, "B", &["B"]).unwrap().verdict);
    }

    #[test]
    fn product_witnesses() {
        let ab = SystemLayout::bipartite("A", 2, "B", 2).unwrap();
        let id = ProductWitness { terms: vec![(ComplexMatrix::identity(2), ComplexMatrix::identity(2))] };
        let ch = KrausChannel::from_witness(id, ab.clone(), ab.clone()).unwrap();
        assert!(check_si_kraus(&ch).unwrap().verdict && check_sqi_kraus(&ch).unwrap().verdict);
        let ih = ProductWitness { terms: vec![(ComplexMatrix::identity(2), hadamard())] };
        let ch = KrausChannel::from_witness(ih, ab.clone(), ab.clone()).unwrap();
        assert!(!check_sqi_kraus(&ch).unwrap().verdict);
        let hi = ProductWitness { terms: vec![(hadamard(), ComplexMatrix::identity(2))] };
        let ch = KrausChannel::from_witness(hi, ab.clone(), ab.clone()).unwrap();
        assert!(check_sqi_kraus(&ch).unwrap().verdict && !check_si_kraus(&ch).unwrap().verdict);
        let bare = KrausChannel::identity(ab);
        assert!(matches!(check_si_kraus(&bare), Err(Error::Witness(_))));
    }

    #[test]
    fn incoherent_unitaries() {
        let id = incoherent_unitary(&[0, 1], &[0.0, 0.0], "B").unwrap();
        assert!(id.kraus()[0].max_diff(&ComplexMatrix::identity(2)) < 1e-15);
        let x = incoherent_unitary(&[1, 0], &[0.0, 0.0], "B").unwrap();
        assert!(x.kraus()[0].max_diff(&ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])) < 1e-15);
        let u = incoherent_unitary(&[2, 0, 3, 1], &[0.3, -1.0, 2.0, 0.1], "B").unwrap();
        let k = &u.kraus()[0];
        assert!(k.adjoint().matmul(k).max_diff(&ComplexMatrix::identity(4)) < 1e-12);
        assert!(is_incoherent_kraus_op(k));
        assert!(check_diio(&u).unwrap().verdict);
        assert!(incoherent_unitary(&[0, 0], &[0.0, 0.0], "B").is_err());
    }
}
