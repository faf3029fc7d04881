//! Dephasing, maximally coherent states and incoherent-operation certificates.

pub mod certify;
pub mod channel;

pub use certify::{
    check_diio, check_dio, check_io_given_kraus, check_mio, check_qip, check_si_kraus, check_sqi_kraus, dio_residual,
    incoherent_unitary, is_incoherent_kraus_op, ClassCertificate, CoherenceClass, Residual, CHOI_TOL, KRAUS_ENTRY_TOL,
};
pub use channel::{ChoiMatrix, KrausChannel, ProductWitness, COMPLETENESS_TOL};

use rand::Rng;

use crate::error::Result;
use crate::linalg::random::random_probabilities;
use crate::linalg::{dephase_operator, DensityMatrix, PureState, SystemLayout, C64};

/// Δ on the factor `label`.
pub fn dephase(rho: &DensityMatrix, label: &str) -> Result<DensityMatrix> {
    DensityMatrix::with_tol(dephase_operator(rho.matrix(), rho.layout(), label)?, rho.layout().clone(), rho.psd_tol())
}

/// Δ on every factor.
pub fn dephase_all(rho: &DensityMatrix) -> Result<DensityMatrix> {
    let mut out = rho.clone();
    for label in rho.layout().labels() {
        out = dephase(&out, label)?;
    }
    Ok(out)
}

/// Ψ_d = d^{-1/2} Σ|b⟩ on a single factor.
pub fn mcs(d: usize, label: &str) -> Result<PureState> {
    let amp = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    PureState::new(vec![amp; d], SystemLayout::new(vec![(label, d)])?)
}

/// Diagonal state with flat-Dirichlet weights.
pub fn random_incoherent_state<R: Rng + ?Sized>(d: usize, label: &str, rng: &mut R) -> Result<DensityMatrix> {
    DensityMatrix::diagonal(&random_probabilities(d, rng), label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::rng_from_seed;
    use crate::linalg::{vec_inner, ComplexMatrix};

    #[test]
    fn dephasing_examples() {
        let plus = DensityMatrix::from_pure(&mcs(2, "B").unwrap());
        let d = dephase(&plus, "B").unwrap();
        assert!(d.matrix().max_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
        assert_eq!(dephase(&d, "B").unwrap(), d);
        let s = 0.5f64.sqrt();
        let bell = PureState::new(
            vec![C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(s, 0.0)],
            SystemLayout::bipartite("A", 2, "B", 2).unwrap(),
        )
        .unwrap();
        let db = dephase(&bell.density(), "B").unwrap();
        assert!(db.matrix().max_diff(&ComplexMatrix::diag_real(&[0.5, 0.0, 0.0, 0.5])) < 1e-15);
    }

    #[test]
    fn mcs_examples() {
        assert_eq!(mcs(1, "B").unwrap().vector(), &[C64::new(1.0, 0.0)]);
        for d in 1..6 {
            let psi = mcs(d, "B").unwrap();
            let deph = dephase(&psi.density(), "B").unwrap();
            let overlap = vec_inner(psi.vector(), &deph.matrix().apply(psi.vector())).re;
            assert!((overlap - 1.0 / d as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn incoherent_overlap_bound() {
        let mut rng = rng_from_seed(9);
        for d in 2..=6 {
            let psi = mcs(d, "B").unwrap();
            for _ in 0..50 {
                let s = random_incoherent_state(d, "B", &mut rng).unwrap();
                let o = vec_inner(psi.vector(), &s.matrix().apply(psi.vector())).re;
                assert!(o <= 1.0 / d as f64 + 1e-12);
            }
        }
    }
}
