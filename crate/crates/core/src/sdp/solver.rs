//! Infeasible-start primal-dual interior point method (HKM direction, Mehrotra
//! predictor-corrector) on real symmetric block matrices.
//!
//! Complex Hermitian blocks are embedded as real symmetric matrices
//! `H ↦ [[Re H, −Im H], [Im H, Re H]]` of doubled size, which preserves positive
//! semidefiniteness. Blocks with real coefficients are kept at their own size.
//!
//! Internally the pair is
//! primal: min ⟨C,X⟩ s.t. ⟨Aᵢ,X⟩ = bᵢ, X ⪰ 0;
//! dual:   max bᵀy s.t. S = C − Σ yᵢAᵢ ⪰ 0,
//! with C = F₀, Aᵢ = Fᵢ, b = c, so the user's problem is the dual.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::problem::{HermitianEntry, SdpProblem};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SdpStatus {
    Optimal,
    MaxIter,
    Infeasible,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub y: Vec<f64>,
    /// ⟨C,X⟩ of the internal primal; an upper bound on the user objective at feasibility.
    pub primal_objective: f64,
    /// cᵀy, the user objective.
    pub dual_objective: f64,
    pub duality_gap: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
    pub status: SdpStatus,
    /// ⟨X,S⟩ at every iterate; nonnegative by construction.
    pub complementarity_trace: Vec<f64>,
}

impl SdpSolution {
    pub fn objective(&self) -> f64 {
        self.dual_objective
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Relative gap and infeasibility target for early exit.
    pub tol: f64,
    pub step_fraction: f64,
    /// Clamp iterates back into the open cone when rounding breaks definiteness.
    pub repair: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iter: MAX_ITER, tol: 1e-10, step_fraction: 0.98, repair: false }
    }
}

pub const MAX_ITER: usize = 500;
/// Status Optimal requires a relative gap below this.
pub const OPTIMAL_GAP: f64 = 1e-7;
/// Divergence guard multiplier on the largest problem entry.
pub const BIG_M: f64 = 1e6;

type Blocks = Vec<DMatrix<f64>>;
/// (row, col, weight).
type Entry = (usize, usize, f64);

/// Sparse real symmetric coefficient restricted to one block; both triangles listed.
#[derive(Clone, Debug)]
struct BlockEntries {
    block: usize,
    entries: Vec<Entry>,
}

struct Embedded {
    dims: Vec<usize>,
    c: Blocks,
    a: Vec<Vec<BlockEntries>>,
    b: Vec<f64>,
}

fn embed_entry(e: &HermitianEntry, n: usize, real: bool, out: &mut Vec<(usize, usize, f64)>) {
    let (r, c, v) = (e.row, e.col, e.value);
    let mut push = |i: usize, j: usize, w: f64| {
        if w != 0.0 {
            out.push((i, j, w));
            if i != j {
                out.push((j, i, w));
            }
        }
    };
    if real {
        push(r, c, v.re);
        return;
    }
    push(r, c, v.re);
    push(n + r, n + c, v.re);
    if r != c {
        push(r, n + c, -v.im);
        push(c, n + r, v.im);
    }
}

fn embed(p: &SdpProblem) -> Embedded {
    let m = p.num_vars();
    let mut dims = Vec::with_capacity(p.blocks.len());
    let mut c = Vec::with_capacity(p.blocks.len());
    let mut a: Vec<Vec<BlockEntries>> = vec![Vec::new(); m];
    for (k, blk) in p.blocks.iter().enumerate() {
        let real = blk.is_real();
        let n = if real { blk.dim } else { 2 * blk.dim };
        dims.push(n);
        let mut ck = DMatrix::zeros(n, n);
        let mut tmp = Vec::new();
        for e in &blk.constant {
            tmp.clear();
            embed_entry(e, blk.dim, real, &mut tmp);
            for &(i, j, w) in &tmp {
                ck[(i, j)] += w;
            }
        }
        c.push(ck);
        for (v, list) in &blk.terms {
            let mut entries = Vec::new();
            for e in list {
                embed_entry(e, blk.dim, real, &mut entries);
            }
            if !entries.is_empty() {
                a[*v].push(BlockEntries { block: k, entries });
            }
        }
    }
    Embedded { dims, c, a, b: p.objective.clone() }
}

impl Embedded {
    fn apply(&self, x: &Blocks) -> Vec<f64> {
        self.a
            .iter()
            .map(|parts| parts.iter().map(|be| be.entries.iter().map(|&(i, j, w)| w * x[be.block][(i, j)]).sum::<f64>()).sum())
            .collect()
    }

    fn adjoint(&self, y: &[f64]) -> Blocks {
        let mut out: Blocks = self.dims.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (v, parts) in self.a.iter().enumerate() {
            if y[v] == 0.0 {
                continue;
            }
            for be in parts {
                for &(i, j, w) in &be.entries {
                    out[be.block][(i, j)] += w * y[v];
                }
            }
        }
        out
    }

    /// Schur complement M_ij = tr(Aᵢ X Aⱼ S⁻¹).
    fn schur(&self, x: &Blocks, sinv: &Blocks) -> DMatrix<f64> {
        let m = self.b.len();
        let mut out = DMatrix::zeros(m, m);
        // Variables touching each block, with their entry lists.
        let mut per_block: Vec<Vec<(usize, &[Entry])>> = vec![Vec::new(); self.dims.len()];
        for (v, parts) in self.a.iter().enumerate() {
            for be in parts {
                per_block[be.block].push((v, be.entries.as_slice()));
            }
        }
        for (k, vars) in per_block.iter().enumerate() {
            let n = self.dims[k];
            let (xk, zk) = (&x[k], &sinv[k]);
            let mut g = DMatrix::<f64>::zeros(n, n);
            for (jj, &(vj, ej)) in vars.iter().enumerate() {
                g.fill(0.0);
                // G = X Aⱼ S⁻¹ = Σ w·X[:,p] S⁻¹[q,:].
                for &(p, q, w) in ej.iter() {
                    for r in 0..n {
                        let xr = xk[(r, p)] * w;
                        if xr == 0.0 {
                            continue;
                        }
                        for s in 0..n {
                            g[(r, s)] += xr * zk[(q, s)];
                        }
                    }
                }
                for &(vi, ei) in vars.iter().take(jj + 1) {
                    // tr(Aᵢ G) = Σ Aᵢ[r,s] G[s,r].
                    let val: f64 = ei.iter().map(|&(r, s, w)| w * g[(s, r)]).sum();
                    out[(vi, vj)] += val;
                    if vi != vj {
                        out[(vj, vi)] += val;
                    }
                }
            }
        }
        out
    }
}

fn inner(a: &Blocks, b: &Blocks) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

fn fro(a: &Blocks) -> f64 {
    inner(a, a).sqrt()
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest α ≤ 1/frac such that X + αΔX ⪰ 0 (∞ when ΔX keeps X PSD).
fn max_step(x: &Blocks, dx: &Blocks) -> Option<f64> {
    let mut alpha = f64::INFINITY;
    for (xk, dk) in x.iter().zip(dx) {
        let chol = Cholesky::new(xk.clone())?;
        let l = chol.l();
        let t = l.solve_lower_triangular(dk)?;
        let t = l.solve_lower_triangular(&t.transpose())?;
        let ev = SymmetricEigen::new(sym(&t)).eigenvalues;
        let min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < 0.0 {
            alpha = alpha.min(-1.0 / min);
        }
    }
    Some(alpha)
}

/// Restores strict definiteness lost to rounding near the boundary: blocks that
/// fail Cholesky get their spectrum clamped to a small relative floor. The
/// infeasible-start residuals absorb the perturbation on the next iteration.
fn repair_pd(blocks: &mut Blocks) {
    for b in blocks.iter_mut() {
        if Cholesky::new(b.clone()).is_some() {
            continue;
        }
        let e = SymmetricEigen::new(sym(b));
        let top = e.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let floor = 1e-14 * top.max(1e-300);
        let d = e.eigenvalues.map(|v| v.max(floor));
        *b = sym(&(&e.eigenvectors * DMatrix::from_diagonal(&d) * e.eigenvectors.transpose()));
    }
}

fn inverse_spd(s: &Blocks) -> Option<Blocks> {
    s.iter().map(|sk| Cholesky::new(sk.clone()).map(|c| c.inverse())).collect()
}

struct Direction {
    dx: Blocks,
    dy: Vec<f64>,
    ds: Blocks,
}

fn solve_schur(m: &DMatrix<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    let r = DVector::from_column_slice(rhs);
    if let Some(ch) = Cholesky::new(m.clone()) {
        return Some(ch.solve(&r).iter().cloned().collect());
    }
    let scale = (0..m.nrows()).map(|i| m[(i, i)].abs()).fold(0.0, f64::max).max(1e-300);
    let mut reg = m.clone();
    for i in 0..m.nrows() {
        reg[(i, i)] += 1e-13 * scale;
    }
    if let Some(ch) = Cholesky::new(reg) {
        return Some(ch.solve(&r).iter().cloned().collect());
    }
    m.clone().lu().solve(&r).map(|v| v.iter().cloned().collect())
}

/// Solves Δ with ΔX = sym((Rc − XΔS)S⁻¹), ΔS = R_d − Σ Δyⱼ Aⱼ, A(ΔX) = r_p.
fn direction(
    e: &Embedded,
    m: &DMatrix<f64>,
    x: &Blocks,
    sinv: &Blocks,
    rc: &Blocks,
    rd: &Blocks,
    rp: &[f64],
) -> Option<Direction> {
    let h: Blocks = (0..x.len()).map(|k| (&rc[k] - &x[k] * &rd[k]) * &sinv[k]).collect();
    let ah = e.apply(&h);
    let rhs: Vec<f64> = rp.iter().zip(&ah).map(|(a, b)| a - b).collect();
    let dy = solve_schur(m, &rhs)?;
    let aty = e.adjoint(&dy);
    let ds: Blocks = rd.iter().zip(&aty).map(|(r, a)| r - a).collect();
    let dx: Blocks = (0..x.len()).map(|k| sym(&((&rc[k] - &x[k] * &ds[k]) * &sinv[k]))).collect();
    Some(Direction { dx, dy, ds })
}

/// Solves the problem; the returned status reports non-convergence rather than erroring.
///
/// Degenerate problems can stall one configuration and not another, so
/// non-optimal runs are retried along [`RETRY_LADDER`]; the first optimal run
/// wins, else the run with the smallest duality gap.
pub fn solve(p: &SdpProblem) -> Result<SdpSolution> {
    let mut best: Option<SdpSolution> = None;
    for &(step_fraction, repair) in RETRY_LADDER.iter() {
        let sol = solve_with(p, &SolverOptions { step_fraction, repair, ..SolverOptions::default() })?;
        if sol.status == SdpStatus::Optimal {
            return Ok(sol);
        }
        if best.as_ref().is_none_or(|b| sol.duality_gap < b.duality_gap) {
            best = Some(sol);
        }
    }
    Ok(best.expect("ladder is nonempty"))
}

/// (step fraction, repair) settings tried in order by [`solve`].
pub const RETRY_LADDER: [(f64, bool); 5] = [(0.98, false), (0.9, false), (0.98, true), (0.8, true), (0.8, false)];

pub fn solve_with(p: &SdpProblem, opts: &SolverOptions) -> Result<SdpSolution> {
    p.validate()?;
    let e = embed(p);
    let m = e.b.len();
    let total_dim: usize = e.dims.iter().sum();
    let nf = total_dim as f64;
    let big_m = BIG_M * p.max_entry().max(1.0);

    let c_norm = fro(&e.c);
    let b_norm = e.b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let a_norms: Vec<f64> = e
        .a
        .iter()
        .map(|parts| parts.iter().flat_map(|be| be.entries.iter()).map(|&(_, _, w)| w * w).sum::<f64>().sqrt())
        .collect();
    let mut xi = nf.sqrt().max(10.0);
    let mut zeta = nf.sqrt().max(10.0).max(c_norm);
    for (bi, an) in e.b.iter().zip(&a_norms) {
        xi = xi.max(nf.sqrt() * (1.0 + bi.abs()) / (1.0 + an));
        zeta = zeta.max(*an);
    }
    let mut x: Blocks = e.dims.iter().map(|&n| DMatrix::identity(n, n) * xi).collect();
    let mut s: Blocks = e.dims.iter().map(|&n| DMatrix::identity(n, n) * zeta).collect();
    let mut y = vec![0.0; m];
    let mut trace = Vec::new();

    let mut status = SdpStatus::MaxIter;
    let mut iterations = 0;
    let mut stall = 0;
    loop {
        let aty = e.adjoint(&y);
        let rd: Blocks = (0..e.dims.len()).map(|k| &e.c[k] - &s[k] - &aty[k]).collect();
        let ax = e.apply(&x);
        let rp: Vec<f64> = e.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let pobj = inner(&e.c, &x);
        let dobj: f64 = e.b.iter().zip(&y).map(|(b, v)| b * v).sum();
        let xs = inner(&x, &s);
        trace.push(xs);
        let mu = xs / nf;
        let rel_gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let pinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + b_norm);
        let dinf = fro(&rd) / (1.0 + c_norm);
        if rel_gap <= opts.tol && pinf <= opts.tol && dinf <= opts.tol {
            status = SdpStatus::Optimal;
            break;
        }
        let xmax = x.iter().map(|b| b.amax()).fold(0.0, f64::max);
        let ymax = y.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if xmax > big_m || ymax > big_m {
            status = SdpStatus::Infeasible;
            break;
        }
        if iterations >= opts.max_iter || stall >= 5 {
            break;
        }
        iterations += 1;

        if opts.repair {
            repair_pd(&mut x);
            repair_pd(&mut s);
        }
        let Some(sinv) = inverse_spd(&s) else { break };
        let schur = e.schur(&x, &sinv);
        let xs_prod: Blocks = x.iter().zip(&s).map(|(a, b)| a * b).collect();

        // Predictor.
        let rc_aff: Blocks = xs_prod.iter().map(|v| -v).collect();
        let Some(aff) = direction(&e, &schur, &x, &sinv, &rc_aff, &rd, &rp) else { break };
        let (Some(ap), Some(ad)) = (max_step(&x, &aff.dx), max_step(&s, &aff.ds)) else { break };
        let ap = (opts.step_fraction * ap).min(1.0);
        let ad = (opts.step_fraction * ad).min(1.0);
        let x_aff: Blocks = x.iter().zip(&aff.dx).map(|(a, d)| a + d * ap).collect();
        let s_aff: Blocks = s.iter().zip(&aff.ds).map(|(a, d)| a + d * ad).collect();
        let mu_aff = inner(&x_aff, &s_aff) / nf;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let rc: Blocks = (0..x.len())
            .map(|k| DMatrix::identity(e.dims[k], e.dims[k]) * (sigma * mu) - &xs_prod[k] - &aff.dx[k] * &aff.ds[k])
            .collect();
        let Some(dir) = direction(&e, &schur, &x, &sinv, &rc, &rd, &rp) else { break };
        let (Some(ap), Some(ad)) = (max_step(&x, &dir.dx), max_step(&s, &dir.ds)) else { break };
        let ap = (opts.step_fraction * ap).min(1.0);
        let ad = (opts.step_fraction * ad).min(1.0);
        if ap < 1e-10 && ad < 1e-10 {
            stall += 1;
        }
        for k in 0..x.len() {
            x[k] += &dir.dx[k] * ap;
            s[k] += &dir.ds[k] * ad;
        }
        for (v, d) in y.iter_mut().zip(&dir.dy) {
            *v += d * ad;
        }
    }

    let aty = e.adjoint(&y);
    let rd: Blocks = (0..e.dims.len()).map(|k| &e.c[k] - &s[k] - &aty[k]).collect();
    let ax = e.apply(&x);
    let pinf = e.b.iter().zip(&ax).map(|(b, a)| (b - a).powi(2)).sum::<f64>().sqrt() / (1.0 + b_norm);
    let dinf = fro(&rd) / (1.0 + c_norm);
    let pobj = inner(&e.c, &x);
    let dobj: f64 = e.b.iter().zip(&y).map(|(b, v)| b * v).sum();
    let gap = (pobj - dobj).abs();
    if status == SdpStatus::MaxIter && gap <= OPTIMAL_GAP * (1.0 + dobj.abs()) && pinf <= OPTIMAL_GAP && dinf <= OPTIMAL_GAP {
        status = SdpStatus::Optimal;
    }
    Ok(SdpSolution {
        y,
        primal_objective: pobj,
        dual_objective: dobj,
        duality_gap: gap,
        primal_infeasibility: pinf,
        dual_infeasibility: dinf,
        iterations,
        status,
        complementarity_trace: trace,
    })
}
