//! Semidefinite programs built on the interior-point solver.
//!
//! Fixed PSD operators appearing in a fidelity block are restricted to their support
//! (`ρ = VΛV†`, block `[[·, X̃], [X̃†, Λ]]`) so that every program has a strictly
//! feasible point.

use serde::{Deserialize, Serialize};

use super::problem::{ComplexVar, HermitianVar, LmiBlock, SdpProblem};
use super::solver::{solve, SdpSolution, SdpStatus};
use crate::error::{Error, Result};
use crate::linalg::spectral::{eigh, support_cutoff};
use crate::linalg::{ComplexMatrix, DensityMatrix, C64};

/// Largest joint dimension accepted by [`hmin_smooth`].
pub const SMOOTH_HMIN_MAX_DIM: usize = 16;

fn optimal(sol: SdpSolution, what: &str) -> Result<SdpSolution> {
    match sol.status {
        SdpStatus::Optimal => Ok(sol),
        s => Err(Error::Solver(format!("{what}: solver stopped with {s:?} (gap {:.3e})", sol.duality_gap))),
    }
}

/// Support isometry V (columns) and positive eigenvalues of a PSD operator.
fn support(m: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>)> {
    let e = eigh(m)?;
    let cut = support_cutoff(&e.values);
    let keep: Vec<usize> = (0..e.values.len()).filter(|&k| e.values[k] > cut).collect();
    let v = ComplexMatrix::from_fn(m.rows(), keep.len(), |i, j| e.vectors[(i, keep[j])]);
    Ok((v, keep.iter().map(|&k| e.values[k]).collect()))
}

fn objective_from(p: &mut SdpProblem, coeffs: &[(usize, f64)], scale: f64) {
    for &(v, c) in coeffs {
        p.objective[v] += scale * c;
    }
}

/// Orders a bipartite state as (B, R) and returns the matrix with both dimensions.
fn bipartite(rho: &DensityMatrix, b: &str, r: &str) -> Result<(ComplexMatrix, usize, usize)> {
    if rho.layout().factors().len() != 2 {
        return Err(Error::Layout(format!("expected a bipartite layout, got {:?}", rho.layout().labels())));
    }
    let ordered = rho.permute(&[b, r])?;
    let db = ordered.layout().dim_of(b)?;
    let dr = ordered.layout().dim_of(r)?;
    Ok((ordered.into_matrix(), db, dr))
}

/// H_min(B|R) = −log₂ min{tr σ_R : 1_B ⊗ σ_R ⪰ ρ_BR}.
pub fn hmin(rho_br: &DensityMatrix, b: &str, r: &str) -> Result<f64> {
    let (rho, db, dr) = bipartite(rho_br, b, r)?;
    hmin_matrix(&rho, db, dr)
}

/// H_min for a (possibly subnormalized) operator ordered as B ⊗ R.
pub fn hmin_matrix(rho: &ComplexMatrix, db: usize, dr: usize) -> Result<f64> {
    let sigma = HermitianVar::new(0, dr);
    let mut p = SdpProblem::new(sigma.len());
    let mut blk = LmiBlock::new(db * dr);
    blk.add_constant_matrix(0, &rho.scale(-1.0));
    sigma.add_kron_identity(&mut blk, 0, db, 1.0);
    p.add_block(blk);
    objective_from(&mut p, &sigma.trace_against(&ComplexMatrix::identity(dr)), -1.0);
    let sol = optimal(solve(&p)?, "min-entropy program")?;
    Ok(-(-sol.objective()).log2())
}

/// Smoothing ball for [`hmin_smooth`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Smoothing {
    /// tr ρ̃ ≤ 1 with generalized fidelity.
    #[default]
    Subnormalized,
    /// tr ρ̃ = 1.
    Normalized,
}

/// H_min^ε(B|R): max over ρ̃ with F(ρ̃, ρ) ≥ √(1−ε²) of −log₂ min{tr σ_R : 1⊗σ_R ⪰ ρ̃}.
pub fn hmin_smooth(rho_br: &DensityMatrix, b: &str, r: &str, eps: f64, smoothing: Smoothing) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("ε must lie in [0,1), got {eps}")));
    }
    let (rho, db, dr) = bipartite(rho_br, b, r)?;
    let n = db * dr;
    if n > SMOOTH_HMIN_MAX_DIM {
        return Err(Error::Guard(format!("smooth min-entropy limited to dimension {SMOOTH_HMIN_MAX_DIM}, got {n}")));
    }
    if eps == 0.0 {
        return hmin_matrix(&rho, db, dr);
    }
    let (v, lam) = support(&rho)?;
    let rank = lam.len();
    let rho_t = match smoothing {
        Smoothing::Subnormalized => HermitianVar::new(0, n),
        Smoothing::Normalized => HermitianVar::traceless(0, n),
    };
    let sigma = HermitianVar::new(rho_t.end(), dr);
    let x = ComplexVar { offset: sigma.end(), rows: n, cols: rank };
    let mut p = SdpProblem::new(x.offset + ComplexVar::count(n, rank));
    let centre = ComplexMatrix::identity(n).scale(1.0 / n as f64);

    // 1⊗σ − ρ̃ ⪰ 0.
    let mut dominate = LmiBlock::new(n);
    sigma.add_kron_identity(&mut dominate, 0, db, 1.0);
    rho_t.add_to_block(&mut dominate, 0, 0, -1.0);
    if smoothing == Smoothing::Normalized {
        dominate.add_constant_matrix(0, &centre.scale(-1.0));
    }
    p.add_block(dominate);

    // [[ρ̃, X̃], [X̃†, Λ]] ⪰ 0.
    let mut fid = LmiBlock::new(n + rank);
    rho_t.add_to_block(&mut fid, 0, 0, 1.0);
    if smoothing == Smoothing::Normalized {
        fid.add_constant_matrix(0, &centre);
    }
    x.add_to_block(&mut fid, 0, n, 1.0);
    for (k, &l) in lam.iter().enumerate() {
        fid.add_constant(n + k, n + k, C64::new(l, 0.0));
    }
    p.add_block(fid);

    if smoothing == Smoothing::Subnormalized {
        let tr: Vec<(usize, f64)> = rho_t.trace_against(&ComplexMatrix::identity(n)).into_iter().map(|(v, c)| (v, -c)).collect();
        p.add_linear_ge(1.0, &tr);
    }
    // Re tr(X̃V†) ≥ √(1−ε²).
    p.add_linear_ge(-(1.0 - eps * eps).sqrt(), &x.re_trace_with(&v.adjoint()));
    objective_from(&mut p, &sigma.trace_against(&ComplexMatrix::identity(dr)), -1.0);
    let sol = optimal(solve(&p)?, "smooth min-entropy program")?;
    Ok(-(-sol.objective()).log2())
}

/// D_H^ε as the SDP max{−tr Mσ : 0 ⪯ M ⪯ 1, tr Mρ ≥ 1−ε}; returns bits.
///
/// A small type-II optimum is re-solved with σ rescaled by the first estimate, since
/// the solver's gap tolerance is relative to 1 + |objective|.
pub fn dh_sdp(rho: &ComplexMatrix, sigma: &ComplexMatrix, eps: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("ε must lie in [0,1), got {eps}")));
    }
    let first = dh_sdp_type2(rho, sigma, eps)?;
    if first <= 0.0 {
        return Ok(f64::INFINITY);
    }
    let mut best = first;
    if first < 0.1 {
        // Degenerate rescaled problems may stall; keep the first solve then.
        if let Ok(t) = dh_sdp_type2(rho, &sigma.scale(1.0 / first), eps) {
            if t > 0.0 {
                best = t * first;
            }
        }
    }
    Ok(-best.log2())
}

fn dh_sdp_type2(rho: &ComplexMatrix, sigma: &ComplexMatrix, eps: f64) -> Result<f64> {
    let d = rho.rows();
    let m = HermitianVar::new(0, d);
    let mut p = SdpProblem::new(m.len());
    let mut lower = LmiBlock::new(d);
    m.add_to_block(&mut lower, 0, 0, 1.0);
    p.add_block(lower);
    let mut upper = LmiBlock::new(d);
    upper.add_constant_matrix(0, &ComplexMatrix::identity(d));
    m.add_to_block(&mut upper, 0, 0, -1.0);
    p.add_block(upper);
    p.add_linear_ge(-(1.0 - eps), &m.trace_against(rho));
    objective_from(&mut p, &m.trace_against(sigma), -1.0);
    let sol = optimal(solve(&p)?, "hypothesis-testing program")?;
    Ok(-sol.objective())
}

/// F(ρ,σ) = max{Re tr X : [[ρ, X], [X†, σ]] ⪰ 0}.
pub fn fidelity_sdp(rho: &ComplexMatrix, sigma: &ComplexMatrix) -> Result<f64> {
    let (v, lam) = support(rho)?;
    let (w, gam) = support(sigma)?;
    let (r, s) = (lam.len(), gam.len());
    if r == 0 || s == 0 {
        return Ok(0.0);
    }
    let x = ComplexVar { offset: 0, rows: r, cols: s };
    let mut p = SdpProblem::new(ComplexVar::count(r, s));
    let mut blk = LmiBlock::new(r + s);
    for (k, &l) in lam.iter().enumerate() {
        blk.add_constant(k, k, C64::new(l, 0.0));
    }
    for (k, &g) in gam.iter().enumerate() {
        blk.add_constant(r + k, r + k, C64::new(g, 0.0));
    }
    x.add_to_block(&mut blk, 0, r, 1.0);
    p.add_block(blk);
    // X = V X̃ W†, so Re tr X = Re tr(W†V X̃).
    objective_from(&mut p, &x.re_trace_with(&w.adjoint().matmul(&v)), 1.0);
    Ok(optimal(solve(&p)?, "fidelity program")?.objective())
}

/// max over states σ_R of F(ρ_XR, π_X ⊗ σ_R) for ρ ordered as X ⊗ R; returns (F, σ_R).
pub fn decoupling_fidelity_sdp(rho_xr: &ComplexMatrix, dx: usize, dr: usize) -> Result<(f64, ComplexMatrix)> {
    let n = dx * dr;
    let (v, lam) = support(rho_xr)?;
    let rank = lam.len();
    let sigma = HermitianVar::new(0, dr);
    let x = ComplexVar { offset: sigma.end(), rows: rank, cols: n };
    let mut p = SdpProblem::new(x.offset + ComplexVar::count(rank, n));
    let mut blk = LmiBlock::new(rank + n);
    for (k, &l) in lam.iter().enumerate() {
        blk.add_constant(k, k, C64::new(l, 0.0));
    }
    x.add_to_block(&mut blk, 0, rank, 1.0);
    sigma.add_kron_identity(&mut blk, rank, dx, 1.0 / dx as f64);
    p.add_block(blk);
    let tr: Vec<(usize, f64)> = sigma.trace_against(&ComplexMatrix::identity(dr)).into_iter().map(|(k, c)| (k, -c)).collect();
    p.add_linear_ge(1.0, &tr);
    // X = V X̃, so Re tr X = Re tr(V X̃).
    objective_from(&mut p, &x.re_trace_with(&v), 1.0);
    let sol = optimal(solve(&p)?, "decoupling fidelity program")?;
    Ok((sol.objective(), sigma.value(&sol.y)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::dh;
    use crate::linalg::random::{random_density, rng_from_seed};
    use crate::linalg::{fidelity_psd, kron, SystemLayout};

    fn br(m: ComplexMatrix, db: usize, dr: usize) -> DensityMatrix {
        DensityMatrix::new(m, SystemLayout::bipartite("B", db, "R", dr).unwrap()).unwrap()
    }

    fn bell() -> ComplexMatrix {
        let h = 0.5;
        ComplexMatrix::from_real_rows(&[&[h, 0.0, 0.0, h], &[0.0; 4], &[0.0; 4], &[h, 0.0, 0.0, h]])
    }

    #[test]
    fn hmin_examples() {
        let sr = random_density(2, 2, &mut rng_from_seed(1));
        let dec = br(kron(&ComplexMatrix::identity(3).scale(1.0 / 3.0), &sr), 3, 2);
        assert!((hmin(&dec, "B", "R").unwrap() - 3f64.log2()).abs() < 1e-7);
        assert!((hmin(&br(bell(), 2, 2), "B", "R").unwrap() + 1.0).abs() < 1e-7);
        let corr = ComplexMatrix::diag_real(&[0.5, 0.0, 0.0, 0.5]);
        assert!(hmin(&br(corr, 2, 2), "B", "R").unwrap().abs() < 1e-7);
    }

    #[test]
    fn classical_min_entropy_oracle() {
        // H_min = −log Σ_r max_b p(b,r) for classical states.
        let p = [0.1, 0.25, 0.3, 0.05, 0.2, 0.1];
        let rho = br(ComplexMatrix::diag_real(&p), 2, 3);
        let guess: f64 = (0..3).map(|r| p[r].max(p[3 + r])).sum();
        assert!((hmin(&rho, "B", "R").unwrap() + guess.log2()).abs() < 1e-7);
    }

    #[test]
    fn hmin_respects_label_order() {
        let sr = random_density(2, 2, &mut rng_from_seed(2));
        let m = kron(&sr, &ComplexMatrix::identity(3).scale(1.0 / 3.0));
        let st = DensityMatrix::new(m, SystemLayout::bipartite("R", 2, "B", 3).unwrap()).unwrap();
        assert!((hmin(&st, "B", "R").unwrap() - 3f64.log2()).abs() < 1e-7);
    }

    #[test]
    fn smooth_hmin_at_zero_and_monotone() {
        let rho = br(random_density(4, 3, &mut rng_from_seed(3)), 2, 2);
        let h0 = hmin(&rho, "B", "R").unwrap();
        assert!((hmin_smooth(&rho, "B", "R", 0.0, Smoothing::Subnormalized).unwrap() - h0).abs() < 1e-7);
        let mut prev = h0;
        for &eps in &[0.05, 0.1, 0.2, 0.4] {
            let h = hmin_smooth(&rho, "B", "R", eps, Smoothing::Subnormalized).unwrap();
            assert!(h >= prev - 1e-7, "ε={eps}: {h} < {prev}");
            prev = h;
        }
    }

    #[test]
    fn normalized_smoothing_approaches_log_b() {
        let rho = br(bell(), 2, 2);
        let h = hmin_smooth(&rho, "B", "R", 0.9999, Smoothing::Normalized).unwrap();
        assert!((h - 1.0).abs() < 1e-3, "{h}");
    }

    #[test]
    fn smooth_hmin_guard() {
        let rho = br(ComplexMatrix::identity(18).scale(1.0 / 18.0), 3, 6);
        assert!(matches!(hmin_smooth(&rho, "B", "R", 0.1, Smoothing::Subnormalized), Err(Error::Guard(_))));
    }

    #[test]
    fn dh_program_matches_neyman_pearson() {
        let mut rng = rng_from_seed(4);
        for d in 2..=4 {
            let rho = random_density(d, d, &mut rng);
            let sigma = random_density(d, d - 1, &mut rng);
            for &eps in &[0.1, 0.5] {
                let np = dh(&rho, &sigma, eps).unwrap().value_bits;
                let s = dh_sdp(&rho, &sigma, eps).unwrap();
                assert!((np - s).abs() < 1e-6, "d={d} ε={eps}: {np} vs {s}");
            }
        }
    }

    #[test]
    fn fidelity_program_matches_closed_form() {
        let mut rng = rng_from_seed(5);
        for (d, r1, r2) in [(2, 2, 2), (3, 3, 2), (4, 2, 4), (3, 1, 3)] {
            let a = random_density(d, r1, &mut rng);
            let b = random_density(d, r2, &mut rng);
            assert!((fidelity_sdp(&a, &b).unwrap() - fidelity_psd(&a, &b).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn decoupling_fidelity_of_product_is_one() {
        let sr = random_density(2, 2, &mut rng_from_seed(6));
        let rho = kron(&ComplexMatrix::identity(2).scale(0.5), &sr);
        let (f, s) = decoupling_fidelity_sdp(&rho, 2, 2).unwrap();
        assert!((f - 1.0).abs() < 1e-7);
        assert!(s.max_diff(&sr) < 1e-4);
    }
}
