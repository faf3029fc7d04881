//! Secrecy distance d_sec(X|R) = min_σ P(ρ_XR, π_X ⊗ σ_R).
//!
//! For classical X with blocks ω_x (so ρ_XR = Σ |x⟩⟨x| ⊗ ω_x) the fidelity to
//! π ⊗ σ is g(σ)/√|X| with g(σ) = Σ_x ‖√ω_x √σ‖₁, which is concave in σ.
//! It is maximized by a monotone alternating ascent on τ = √σ and certified
//! with a matching upper bound; the SDP is the fallback when the two do not meet.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    dephase_operator, distance_from_fidelity, eigh, fidelity_psd, kron, permute_operator, sqrt_psd, svd, ComplexMatrix,
    DensityMatrix,
};
use crate::sdp::decoupling_fidelity_sdp;

/// Largest certified fidelity gap accepted without consulting the SDP.
pub const DSEC_GAP_TOL: f64 = 1e-7;
/// Iteration cap of the ascent.
pub const DSEC_MAX_ITERS: usize = 5000;
/// Largest |X|·|R| for which the SDP fallback is attempted.
pub const DSEC_SDP_MAX_DIM: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DsecMethod {
    Ascent,
    Sdp,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DsecResult {
    /// P(ρ_XR, π ⊗ σ*) at the returned σ*. Achieved, hence an upper bound on d_sec.
    pub value: f64,
    pub fidelity: f64,
    /// Certified upper bound on the optimal fidelity.
    pub fidelity_upper: f64,
    /// `fidelity_upper − fidelity`.
    pub gap: f64,
    /// Certified lower bound on d_sec.
    pub value_lower: f64,
    pub sigma: ComplexMatrix,
    pub method: DsecMethod,
    pub iterations: usize,
}

/// g(σ) = Σ ‖√ω_x √σ‖₁ given √ω_x and √σ.
fn objective(sqrt_blocks: &[ComplexMatrix], tau: &ComplexMatrix) -> Result<f64> {
    let mut g = 0.0;
    for s in sqrt_blocks {
        g += svd(&s.matmul(tau))?.singular_values.iter().sum::<f64>();
    }
    Ok(g)
}

/// Eigenvalues floored at `floor · λ_max`, applied in the operator's eigenbasis
/// so that the floor survives even below machine precision of the entries.
fn floored(m: &ComplexMatrix, floor: f64) -> Result<crate::linalg::Eigh> {
    let mut e = eigh(m)?;
    let top = e.max().max(1e-300);
    e.values.iter_mut().for_each(|x| *x = x.max(floor * top));
    Ok(e)
}

/// Upper bound on max_σ g(σ). For any Y > 0,
/// ‖√ω √σ‖₁ ≤ ½(c·tr Y + tr σ √ω Y⁻¹ √ω / c), so summing over blocks and
/// maximizing over σ gives √(Σ tr Y_x · λ_max(Σ √ω_x Y_x⁻¹ √ω_x)). Y_x is the
/// minimizer (√ω σ √ω)^½ at the candidate σ, shifted to be invertible; the
/// kernel of ω drops out of √ω Y⁻¹ √ω, so singular blocks cost nothing.
fn upper_bound(sqrt_blocks: &[ComplexMatrix], sigma: &ComplexMatrix) -> Result<f64> {
    let d = sigma.rows();
    let mut best = f64::INFINITY;
    for floor in [1e-15, 1e-13, 1e-11, 1e-9, 1e-7] {
        let tau = floored(sigma, floor)?.apply_fn(|x| x.sqrt());
        let mut a = 0.0;
        let mut b_sum = ComplexMatrix::zeros(d, d);
        for w in sqrt_blocks {
            let dec = svd(&w.matmul(&tau))?;
            let shift = floor * dec.singular_values[0].max(1e-300);
            a += dec.singular_values.iter().map(|x| x + shift).sum::<f64>();
            let y_inv = polar_root(&dec, |x| 1.0 / (x + shift));
            b_sum += &w.matmul(&y_inv).matmul(w);
        }
        let b = eigh(&b_sum.hermitian_part())?.max();
        let bound = (a * b.max(0.0)).sqrt();
        if bound.is_finite() {
            best = best.min(bound);
        }
    }
    Ok(best)
}

/// U f(Σ) U† from M = U Σ V†, i.e. a function of (MM†)^½.
fn polar_root(dec: &crate::linalg::Svd, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let vals: Vec<crate::linalg::C64> = dec.singular_values.iter().map(|&x| crate::linalg::C64::new(f(x), 0.0)).collect();
    dec.u.matmul(&ComplexMatrix::diag(&vals)).matmul(&dec.u.adjoint())
}

/// d_sec for a classical register given its unnormalized blocks ω_x on R.
/// Zero blocks still count towards |X|.
pub fn dsec_cq(blocks: &[ComplexMatrix]) -> Result<DsecResult> {
    let nx = blocks.len();
    if nx == 0 {
        return Err(Error::Domain("classical register is empty".into()));
    }
    let dr = blocks[0].rows();
    if blocks.iter().any(|b| !b.is_square() || b.rows() != dr) {
        return Err(Error::Dimension("cq blocks must share one square shape".into()));
    }
    let total = blocks.iter().fold(ComplexMatrix::zeros(dr, dr), |acc, b| &acc + b);
    let mass = total.trace().re;
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::Domain(format!("cq blocks have total trace {mass}, expected 1")));
    }
    let sqrt_blocks: Vec<ComplexMatrix> =
        blocks.iter().filter(|b| b.trace().re > 0.0).map(sqrt_psd).collect::<Result<_>>()?;
    let norm = (nx as f64).sqrt();

    let mut sigma = total.scale(1.0 / mass);
    let mut tau = sqrt_psd(&sigma)?;
    let mut g = objective(&sqrt_blocks, &tau)?;
    let mut iterations = 0;
    let mut stalls = 0;
    while iterations < DSEC_MAX_ITERS {
        iterations += 1;
        let mut m = ComplexMatrix::zeros(dr, dr);
        for s in &sqrt_blocks {
            let dec = svd(&s.matmul(&tau))?;
            // tr(U s τ) = ‖s τ‖₁ for U = V W† with s τ = W Σ V†.
            let u = dec.v.matmul(&dec.u.adjoint());
            m = &m + &u.matmul(s);
        }
        let pos = eigh(&m.hermitian_part())?.apply_fn(|x| x.max(0.0));
        let fro = pos.frobenius_norm();
        if fro <= 0.0 {
            break;
        }
        let next_tau = pos.scale(1.0 / fro);
        let next_g = objective(&sqrt_blocks, &next_tau)?;
        if next_g < g {
            break;
        }
        let gain = next_g - g;
        tau = next_tau;
        g = next_g;
        if gain <= 1e-15 * g.max(1.0) {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    sigma = tau.matmul(&tau).hermitian_part();
    let mut fidelity = (g / norm).min(1.0);
    let mut upper = (upper_bound(&sqrt_blocks, &sigma)? / norm).min(1.0).max(fidelity);
    let mut method = DsecMethod::Ascent;

    if upper - fidelity > DSEC_GAP_TOL && nx * dr <= DSEC_SDP_MAX_DIM {
        // A solver failure leaves the ascent result standing; it is achieved either way.
        if let Ok((f_sdp, sigma_sdp)) = decoupling_fidelity_sdp(&ComplexMatrix::direct_sum(blocks), nx, dr) {
            let sigma_sdp = normalize_state(&sigma_sdp)?;
            let f_at_sdp = (objective(&sqrt_blocks, &sqrt_psd(&sigma_sdp)?)? / norm).min(1.0);
            if f_at_sdp > fidelity {
                sigma = sigma_sdp;
                fidelity = f_at_sdp;
                method = DsecMethod::Sdp;
            }
            // The interior-point optimum is accurate to about 1e-7 relative.
            let sdp_upper = f_sdp + 1e-7 * (1.0 + f_sdp);
            upper = upper.min(sdp_upper).max(fidelity);
        }
    }
    Ok(DsecResult {
        value: distance_from_fidelity(fidelity),
        fidelity,
        fidelity_upper: upper,
        gap: upper - fidelity,
        value_lower: distance_from_fidelity(upper),
        sigma,
        method,
        iterations,
    })
}

fn normalize_state(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let pos = eigh(&m.hermitian_part())?.apply_fn(|x| x.max(0.0));
    let t = pos.trace().re;
    if t <= 0.0 {
        return Err(Error::Numerical("optimizer returned a zero state".into()));
    }
    Ok(pos.scale(1.0 / t))
}

/// Blocks ω_x of a state that is classical on `x`, as operators on the
/// remaining factors in their original order.
pub fn cq_blocks(rho: &DensityMatrix, x: &str) -> Result<Vec<ComplexMatrix>> {
    let layout = rho.layout();
    let dx = layout.dim_of(x)?;
    let mut order = vec![x];
    order.extend(layout.labels().into_iter().filter(|&l| l != x));
    let (m, _) = permute_operator(rho.matrix(), layout, &order)?;
    let dr = m.rows() / dx;
    Ok((0..dx).map(|k| m.block(k * dr, k * dr, dr, dr)).collect())
}

/// Largest entry of ρ − Δ_x(ρ); zero for states classical on `x`.
pub fn classicality_defect(rho: &DensityMatrix, x: &str) -> Result<f64> {
    Ok(dephase_operator(rho.matrix(), rho.layout(), x)?.max_diff(rho.matrix()))
}

/// d_sec(X|R) where R is every factor other than `x`. States classical on X
/// (to 1e-12) use the cq path, others the SDP.
pub fn dsec(rho: &DensityMatrix, x: &str) -> Result<DsecResult> {
    if classicality_defect(rho, x)? <= 1e-12 {
        return dsec_cq(&cq_blocks(rho, x)?);
    }
    let layout = rho.layout();
    let dx = layout.dim_of(x)?;
    let dr = rho.dim() / dx;
    if rho.dim() > DSEC_SDP_MAX_DIM {
        return Err(Error::Guard(format!("quantum d_sec limited to dimension {DSEC_SDP_MAX_DIM}")));
    }
    let mut order = vec![x];
    order.extend(layout.labels().into_iter().filter(|&l| l != x));
    let (m, _) = permute_operator(rho.matrix(), layout, &order)?;
    let (f, sigma) = decoupling_fidelity_sdp(&m, dx, dr)?;
    let sigma = normalize_state(&sigma)?;
    let pi_sigma = kron(&ComplexMatrix::identity(dx).scale(1.0 / dx as f64), &sigma);
    let achieved = fidelity_psd(&m, &pi_sigma)?;
    let upper = (f + 1e-7 * (1.0 + f)).max(achieved).min(1.0);
    Ok(DsecResult {
        value: distance_from_fidelity(achieved),
        fidelity: achieved,
        fidelity_upper: upper,
        gap: upper - achieved,
        value_lower: distance_from_fidelity(upper),
        sigma,
        method: DsecMethod::Sdp,
        iterations: 0,
    })
}
