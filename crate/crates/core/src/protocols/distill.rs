//! Coherence distillers built from a successful extraction by Uhlmann's theorem.
//!
//! With σ* the optimal reference state of the extraction and |φ*⟩ a
//! purification of σ* on the input system, each hash class ℓ gets the unitary
//! U_ℓ maximizing ⟨φ*|U_ℓ ⊗ I|ψ_ℓ⟩. The distiller first dephases and hashes
//! the input (recording ℓ), then applies U_ℓ and discards the input system.

use serde::{Deserialize, Serialize};

use super::dsec::{dsec_cq, DsecResult};
use super::extraction::{EXTRACTION_SLACK, HASH_LABEL, REF_LABEL};
use super::hash::HashFunction;
use crate::coherence::{check_diio, check_qip, mcs, ClassCertificate, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{eigh, purified_distance, purify, svd, ComplexMatrix, DensityMatrix, SystemLayout, C64, ZERO};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistillerReport {
    pub channel: KrausChannel,
    pub certificates: Vec<ClassCertificate>,
    /// P(Γ(ρ), Ψ_L).
    pub error_p: f64,
    pub target_dim: usize,
    /// d_sec of the extraction the distiller was built from.
    pub achieved_d_sec: f64,
    /// |⟨Ψ_L ⊗ φ*| U U_f |ψ⟩|, the fidelity along the construction.
    pub chain_fidelity: f64,
    /// F(ρ_LR, π_L ⊗ σ*) of the extraction.
    pub extraction_fidelity: f64,
}

impl DistillerReport {
    pub fn chain_residual(&self) -> f64 {
        (self.chain_fidelity - self.extraction_fidelity).abs()
    }
}

/// P(Γ(ρ), Ψ_d) for a channel onto a single d-dimensional register.
pub fn distillation_error(gamma: &KrausChannel, rho: &DensityMatrix) -> Result<f64> {
    let out = gamma.apply_state(rho)?;
    let d = out.dim();
    let target = mcs(d, out.layout().labels()[0])?.density().with_layout(out.layout().clone())?;
    purified_distance(&out, &target)
}

/// Rows of the purification matrix Ψ[x, r] (input index x, reference r).
fn purification_matrix(rho: &DensityMatrix) -> Result<ComplexMatrix> {
    let psi = purify(rho, REF_LABEL)?;
    let d = rho.dim();
    let r = psi.vector().len() / d;
    Ok(ComplexMatrix::from_fn(d, r, |x, k| psi.vector()[x * r + k]))
}

/// Φ*[k, r] with tr_in |φ*⟩⟨φ*| = σ*, padded with zero rows to `d` inputs.
fn target_purification(sigma: &ComplexMatrix, d: usize) -> Result<ComplexMatrix> {
    let e = eigh(sigma)?;
    let dr = sigma.rows();
    if dr > d {
        return Err(Error::Dimension("reference larger than the input system".into()));
    }
    let mut phi = ComplexMatrix::zeros(d, dr);
    for (slot, k) in (0..dr).rev().enumerate() {
        let w = e.values[k].max(0.0).sqrt();
        let v = e.vector(k);
        for r in 0..dr {
            phi[(slot, r)] = v[r] * w;
        }
    }
    Ok(phi)
}

/// Uhlmann unitary U maximizing |tr(Φ*† U Φ)|: U = W V† for Φ Φ*† = V Σ W†.
fn uhlmann_unitary(phi: &ComplexMatrix, target: &ComplexMatrix) -> Result<ComplexMatrix> {
    let m = phi.matmul(&target.adjoint());
    if m.max_abs() == 0.0 {
        return Ok(ComplexMatrix::identity(m.rows()));
    }
    let dec = svd(&m)?;
    Ok(dec.v.matmul(&dec.u.adjoint()))
}

struct Construction {
    unitaries: Vec<ComplexMatrix>,
    secrecy: DsecResult,
    chain_fidelity: f64,
}

/// Uhlmann unitaries per hash class for a purification matrix `psi` whose rows
/// are indexed by input basis states; `class_of(x)` is the class of row x.
fn construct(psi: &ComplexMatrix, l_size: usize, class_of: impl Fn(usize) -> usize, eps: f64) -> Result<Construction> {
    let (d, dr) = (psi.rows(), psi.cols());
    let mut rows_by_class: Vec<ComplexMatrix> = vec![ComplexMatrix::zeros(d, dr); l_size];
    let mut blocks = vec![ComplexMatrix::zeros(dr, dr); l_size];
    for x in 0..d {
        let l = class_of(x);
        let row: Vec<C64> = (0..dr).map(|r| psi[(x, r)]).collect();
        for r in 0..dr {
            rows_by_class[l][(x, r)] = row[r];
        }
        // ω_ℓ[r, r'] = Σ Ψ[x,r] conj(Ψ[x,r']).
        blocks[l] += &ComplexMatrix::outer(&row, &row);
    }
    let secrecy = dsec_cq(&blocks)?;
    if secrecy.value > eps + EXTRACTION_SLACK {
        return Err(Error::Precondition(format!("extraction has d_sec {:.6e} > ε = {eps}", secrecy.value)));
    }
    let target = target_purification(&secrecy.sigma, d)?;
    let mut unitaries = Vec::with_capacity(l_size);
    let mut overlap = ZERO;
    for phi_l in &rows_by_class {
        let u = uhlmann_unitary(phi_l, &target)?;
        overlap += target.adjoint().matmul(&u).matmul(phi_l).trace();
        unitaries.push(u);
    }
    let chain_fidelity = overlap.norm() / (l_size as f64).sqrt();
    Ok(Construction { unitaries, secrecy, chain_fidelity })
}

/// Distiller B → L from a hash with d_sec ≤ ε on the identity preprocessing.
/// Kraus operators G_b[f(x), x] = ⟨b|U_{f(x)}|x⟩; the channel is DIIO by construction.
pub fn build_distiller_from_extraction(rho_b: &DensityMatrix, f: &HashFunction, eps: f64) -> Result<DistillerReport> {
    let d = rho_b.dim();
    if f.domain_size() != d {
        return Err(Error::Dimension(format!("hash on {} letters for a {d}-dimensional input", f.domain_size())));
    }
    let psi = purification_matrix(rho_b)?;
    let c = construct(&psi, f.l_size(), |x| f.apply(x), eps)?;
    let l = f.l_size();
    let kraus: Vec<ComplexMatrix> = (0..d)
        .map(|b| {
            let mut g = ComplexMatrix::zeros(l, d);
            for x in 0..d {
                g[(f.apply(x), x)] = c.unitaries[f.apply(x)][(b, x)];
            }
            g
        })
        .collect();
    let channel = KrausChannel::new(kraus, rho_b.layout().clone(), SystemLayout::single(HASH_LABEL, l))?;
    let certificates = vec![check_diio(&channel)?];
    Ok(DistillerReport {
        error_p: distillation_error(&channel, rho_b)?,
        certificates,
        target_dim: l,
        achieved_d_sec: c.secrecy.value,
        chain_fidelity: c.chain_fidelity,
        extraction_fidelity: c.secrecy.fidelity,
        channel,
    })
}

/// Assisted distiller AB → L with f hashing Bob's factor. Kraus operators
/// K_{ab}[f(x), (a', x)] = ⟨ab|U_{f(x)}|a'x⟩; Bob's classical data only steers
/// Alice-side unitaries, so the channel is QIP.
pub fn build_assisted_distiller(rho_ab: &DensityMatrix, f: &HashFunction, eps: f64) -> Result<DistillerReport> {
    let labels = rho_ab.layout().labels();
    let [_, bob] = labels.as_slice() else {
        return Err(Error::Layout("assisted distillation needs a bipartite (A, B) state".into()));
    };
    let bob = bob.to_string();
    let db = rho_ab.layout().dim_of(&bob)?;
    let da = rho_ab.dim() / db;
    if f.domain_size() != db {
        return Err(Error::Dimension(format!("hash on {} letters for Bob's {db}-dimensional system", f.domain_size())));
    }
    let psi = purification_matrix(rho_ab)?;
    let c = construct(&psi, f.l_size(), |ax| f.apply(ax % db), eps)?;
    let l = f.l_size();
    let d = da * db;
    let kraus: Vec<ComplexMatrix> = (0..d)
        .map(|ab| {
            let mut k = ComplexMatrix::zeros(l, d);
            for ax in 0..d {
                let lx = f.apply(ax % db);
                k[(lx, ax)] = c.unitaries[lx][(ab, ax)];
            }
            k
        })
        .collect();
    let channel = KrausChannel::new(kraus, rho_ab.layout().clone(), SystemLayout::single(HASH_LABEL, l))?;
    let certificates = vec![check_qip(&channel, &bob, &[HASH_LABEL])?];
    Ok(DistillerReport {
        error_p: distillation_error(&channel, rho_ab)?,
        certificates,
        target_dim: l,
        achieved_d_sec: c.secrecy.value,
        chain_fidelity: c.chain_fidelity,
        extraction_fidelity: c.secrecy.fidelity,
        channel,
    })
}
