//! Seeded random states, unitaries and channels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::matrix::{ComplexMatrix, C64};
use super::spectral::eigh;

/// Deterministic generator for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Per-task seed derived from a root seed by counter-mode SplitMix64.
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian_c64<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

/// Haar-distributed unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| gaussian_c64(rng)).collect();
    let n = super::matrix::vec_norm(&v);
    v.into_iter().map(|z| z / n).collect()
}

/// Hilbert–Schmidt style mixed state of the given rank.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, rank, rng);
    let m = g.matmul(&g.adjoint()).hermitian_part();
    let t = m.trace().re;
    m.scale(1.0 / t)
}

/// Random Hermitian matrix (GUE-like).
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    ginibre(dim, dim, rng).hermitian_part()
}

/// Haar isometry `rows × cols` (`rows ≥ cols`), from G(G†G)^{-1/2}.
pub fn random_isometry<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = ginibre(rows, cols, rng);
    let gram = g.adjoint().matmul(&g).hermitian_part();
    let e = eigh(&gram).expect("Gram matrix is Hermitian");
    g.matmul(&e.apply_fn(|x| 1.0 / x.sqrt()))
}

pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    random_isometry(dim, dim, rng)
}

/// Kraus operators of a random channel `in_dim → out_dim` with `count` operators.
pub fn random_kraus<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, count: usize, rng: &mut R) -> Vec<ComplexMatrix> {
    let v = random_isometry(out_dim * count, in_dim, rng);
    (0..count).map(|k| v.block(k * out_dim, 0, out_dim, in_dim)).collect()
}

/// Random probability vector (flat Dirichlet).
pub fn random_probabilities<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}
