//! Hermitian eigendecomposition, SVD and spectral matrix functions.

use nalgebra::{SymmetricEigen, SVD};

use super::matrix::{ComplexMatrix, C64};
use crate::error::{Error, Result};

/// Relative Hermiticity tolerance accepted by [`eigh`].
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Eigenvalues ascending; eigenvectors are the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl Eigh {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// V f(Λ) V†.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        let v = &self.vectors;
        let mut out = ComplexMatrix::zeros(v.rows(), v.rows());
        for k in 0..n {
            if fv[k] == 0.0 {
                continue;
            }
            for i in 0..v.rows() {
                let a = v[(i, k)] * fv[k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..v.rows() {
                    out[(i, j)] += a * v[(j, k)].conj();
                }
            }
        }
        out
    }

    /// Projector onto eigenvectors selected by `keep`.
    pub fn projector(&self, keep: impl Fn(f64) -> bool) -> ComplexMatrix {
        self.apply_fn(|x| if keep(x) { 1.0 } else { 0.0 })
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Hermitian eigendecomposition with ascending eigenvalues.
///
/// Input must be Hermitian within `1e-9·max(1, max|m|)`; it is symmetrized before factoring.
pub fn eigh(m: &ComplexMatrix) -> Result<Eigh> {
    if !m.is_square() {
        return Err(Error::Numerical(format!("eigh needs a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    let scale = m.max_abs().max(1.0);
    let defect = m.hermiticity_defect();
    if defect > HERMITIAN_TOL * scale {
        return Err(Error::Numerical(format!("matrix is not Hermitian (defect {defect:.3e})")));
    }
    let n = m.rows();
    if n == 0 {
        return Ok(Eigh { values: vec![], vectors: ComplexMatrix::zeros(0, 0) });
    }
    if n == 1 {
        return Ok(Eigh { values: vec![m[(0, 0)].re], vectors: ComplexMatrix::identity(1) });
    }
    let h = m.hermitian_part();
    let dec = SymmetricEigen::try_new(h.to_nalgebra(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dec.eigenvalues[a].total_cmp(&dec.eigenvalues[b]));
    let values = order.iter().map(|&k| dec.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| dec.eigenvectors[(i, order[j])]);
    Ok(Eigh { values, vectors })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &ComplexMatrix) -> Result<Vec<f64>> {
    Ok(eigh(m)?.values)
}

/// Singular value decomposition `m = U diag(s) V†` with descending `s`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

/// Thin SVD, M = U Σ V† with singular values descending.
///
/// nalgebra's implicit-shift SVD occasionally returns a wrong decomposition of
/// rank-deficient complex input, so the result is checked by reconstruction
/// and recomputed by one-sided Jacobi when the check fails.
pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    let scale = m.max_abs().max(1e-300);
    if let Some(dec) = SVD::try_new(m.to_nalgebra(), true, true, 5.0 * f64::EPSILON, 0) {
        if let (Some(u), Some(vt)) = (dec.u, dec.v_t) {
            let k = dec.singular_values.len();
            let mut order: Vec<usize> = (0..k).collect();
            order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
            let u = ComplexMatrix::from_fn(u.nrows(), k, |i, j| u[(i, order[j])]);
            let v = ComplexMatrix::from_fn(vt.ncols(), k, |i, j| vt[(order[j], i)].conj());
            let out = Svd { u, singular_values: order.iter().map(|&j| dec.singular_values[j]).collect(), v };
            if svd_defect(m, &out) <= 1e-10 * scale && unitarity_defect(&out.u) <= 1e-10 && unitarity_defect(&out.v) <= 1e-10 {
                return Ok(out);
            }
        }
    }
    let out = jacobi_svd(m)?;
    if svd_defect(m, &out) > 1e-8 * scale {
        return Err(Error::Numerical("SVD reconstruction failed".into()));
    }
    Ok(out)
}

fn svd_defect(m: &ComplexMatrix, s: &Svd) -> f64 {
    let sig: Vec<C64> = s.singular_values.iter().map(|&x| C64::new(x, 0.0)).collect();
    s.u.matmul(&ComplexMatrix::diag(&sig)).matmul(&s.v.adjoint()).max_diff(m)
}

/// One-sided (Hestenes) Jacobi SVD. Slower than the implicit-shift method but
/// accurate in every singular value, including the tiny ones.
fn jacobi_svd(m: &ComplexMatrix) -> Result<Svd> {
    if m.rows() < m.cols() {
        let t = jacobi_svd(&m.adjoint())?;
        return Ok(Svd { u: t.v, singular_values: t.singular_values, v: t.u });
    }
    let (rows, k) = (m.rows(), m.cols());
    let zero = C64::new(0.0, 0.0);
    let mut a: Vec<Vec<C64>> = (0..k).map(|j| m.column(j)).collect();
    let mut v: Vec<Vec<C64>> = (0..k).map(|j| (0..k).map(|i| if i == j { C64::new(1.0, 0.0) } else { zero }).collect()).collect();
    let dot = |x: &[C64], y: &[C64]| -> C64 { x.iter().zip(y).map(|(p, q)| p.conj() * q).sum() };
    let mut converged = false;
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = dot(&a[p], &a[p]).re;
                let beta = dot(&a[q], &a[q]).re;
                let gamma = dot(&a[p], &a[q]);
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = if zeta == 0.0 { 1.0 } else { zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt()) };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for cols in [&mut a, &mut v] {
                    let (lo, hi) = cols.split_at_mut(q);
                    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                        let yp = phase * *y;
                        let nx = *x * c - yp * s;
                        let ny = *x * s + yp * c;
                        *x = nx;
                        *y = ny;
                    }
                }
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numerical("Jacobi SVD did not converge".into()));
    }
    let norms: Vec<f64> = a.iter().map(|c| dot(c, c).re.sqrt()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    // Normalize, re-orthogonalize and complete the left singular vectors.
    let mut basis: Vec<Vec<C64>> = Vec::with_capacity(k);
    let mut fill = 0;
    for &j in &order {
        let mut c: Vec<C64> = if norms[j] > 0.0 { a[j].iter().map(|z| z / norms[j]).collect() } else { vec![zero; rows] };
        loop {
            for b in &basis {
                let pr = dot(b, &c);
                c.iter_mut().zip(b).for_each(|(y, x)| *y -= pr * x);
            }
            let n = dot(&c, &c).re.sqrt();
            if n > 0.5 {
                c.iter_mut().for_each(|z| *z /= n);
                break;
            }
            if fill >= rows {
                return Err(Error::Numerical("SVD basis completion failed".into()));
            }
            c = vec![zero; rows];
            c[fill] = C64::new(1.0, 0.0);
            fill += 1;
        }
        basis.push(c);
    }
    Ok(Svd {
        u: ComplexMatrix::from_fn(rows, k, |i, j| basis[j][i]),
        singular_values: order.iter().map(|&j| norms[j]).collect(),
        v: ComplexMatrix::from_fn(k, k, |i, j| v[order[j]][i]),
    })
}

/// Sum of singular values.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(svd(m)?.singular_values.iter().sum())
}

/// Square root of a PSD matrix. Eigenvalues below `1e-14·λ_max` (including
/// negative round-off) are clamped at 0 so that kernel noise is not amplified.
pub fn sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = eigh(m)?;
    let cut = 1e-14 * e.max().max(0.0);
    Ok(e.apply_fn(|x| if x > cut { x.sqrt() } else { 0.0 }))
}

/// Spectral cutoff below which an eigenvalue of a PSD operator counts as zero.
pub fn support_cutoff(values: &[f64]) -> f64 {
    let top = values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    1e-12 * top.max(1e-300)
}

/// Inverse square root on the support, zero on the kernel.
pub fn pinv_sqrt_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = eigh(m)?;
    let cut = support_cutoff(&e.values);
    Ok(e.apply_fn(|x| if x > cut { 1.0 / x.sqrt() } else { 0.0 }))
}

/// Projector onto the support of a PSD operator.
pub fn support_projector(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let e = eigh(m)?;
    let cut = support_cutoff(&e.values);
    Ok(e.projector(|x| x > cut))
}

/// Unitarity defect ‖U†U − I‖_max.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    u.adjoint().matmul(u).max_diff(&ComplexMatrix::identity(u.cols()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::random_hermitian;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn diagonal_spectrum_sorted() {
        let e = eigh(&ComplexMatrix::diag_real(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let e = eigh(&x).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(eigh(&m), Err(Error::Numerical(_))));
    }

    #[test]
    fn reconstruction_and_unitarity() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for n in [2, 5, 8, 16] {
            let h = random_hermitian(n, &mut rng);
            let e = eigh(&h).unwrap();
            let rec = e.apply_fn(|x| x);
            assert!((&rec - &h).frobenius_norm() <= 1e-9 * h.frobenius_norm());
            assert!(unitarity_defect(&e.vectors) <= 1e-10);
        }
    }

    #[test]
    fn degenerate_spectrum() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let u = crate::linalg::random::random_unitary(6, &mut rng);
        let d = ComplexMatrix::diag_real(&[1.0, 1.0, 1.0, 2.0, 2.0, 0.0]);
        let h = d.conjugate_by(&u);
        let e = eigh(&h).unwrap();
        assert!((e.apply_fn(|x| x).max_diff(&h)) < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12 && (e.values[5] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn svd_reconstructs() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let a = crate::linalg::random::ginibre(4, 4, &mut rng);
        let s = svd(&a).unwrap();
        let rec = s.u.matmul(&ComplexMatrix::diag_real(&s.singular_values)).matmul(&s.v.adjoint());
        assert!(rec.max_diff(&a) < 1e-12);
        assert!(unitarity_defect(&s.u) < 1e-12 && unitarity_defect(&s.v) < 1e-12);
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn svd_of_rank_deficient_products() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        for _ in 0..50 {
            let r1 = crate::linalg::random::random_density(3, 1, &mut rng);
            let full = crate::linalg::random::random_density(3, 3, &mut rng);
            let m = sqrt_psd(&r1).unwrap().matmul(&sqrt_psd(&full).unwrap());
            let s = svd(&m).unwrap();
            assert!((s.singular_values[0] - m.frobenius_norm()).abs() < 1e-10);
            assert!(svd_defect(&m, &s) < 1e-10);
        }
    }

    #[test]
    fn jacobi_fallback_matches() {
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for (r, c) in [(4, 4), (5, 3), (3, 5)] {
            let a = crate::linalg::random::ginibre(r, c, &mut rng);
            let s = jacobi_svd(&a).unwrap();
            assert!(svd_defect(&a, &s) < 1e-12);
            assert!(unitarity_defect(&s.u) < 1e-9 && unitarity_defect(&s.v) < 1e-9);
        }
        let rank1 = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let s = jacobi_svd(&rank1).unwrap();
        assert!(svd_defect(&rank1, &s) < 1e-9 && unitarity_defect(&s.u) < 1e-9);
    }
}
