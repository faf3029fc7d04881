//! SDP problem description in dual LMI form:
//! maximize cᵀy subject to F₀ᵏ − Σᵢ yᵢ Fᵢᵏ ⪰ 0 for every block k.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, C64};

/// Largest complex block dimension accepted.
pub const MAX_BLOCK_DIM: usize = 128;

/// Upper-triangle entry (row ≤ col) of a Hermitian matrix; the lower entry is implied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianEntry {
    pub row: usize,
    pub col: usize,
    pub value: C64,
}

/// One LMI block `F₀ − Σ yᵢFᵢ ⪰ 0` with sparse Hermitian coefficients.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LmiBlock {
    pub dim: usize,
    pub constant: Vec<HermitianEntry>,
    /// (variable index, Fᵢ entries).
    pub terms: Vec<(usize, Vec<HermitianEntry>)>,
}

impl LmiBlock {
    pub fn new(dim: usize) -> Self {
        LmiBlock { dim, constant: Vec::new(), terms: Vec::new() }
    }

    fn push_entry(list: &mut Vec<HermitianEntry>, row: usize, col: usize, value: C64) {
        let (row, col, value) = if row <= col { (row, col, value) } else { (col, row, value.conj()) };
        list.push(HermitianEntry { row, col, value });
    }

    /// Adds `value` at (row, col) and its conjugate at (col, row) of F₀.
    pub fn add_constant(&mut self, row: usize, col: usize, value: C64) {
        Self::push_entry(&mut self.constant, row, col, value);
    }

    /// Adds the dense Hermitian matrix `m` to F₀.
    pub fn add_constant_matrix(&mut self, offset: usize, m: &ComplexMatrix) {
        for i in 0..m.rows() {
            for j in i..m.cols() {
                let v = m[(i, j)];
                if v.norm() > 0.0 {
                    self.add_constant(offset + i, offset + j, v);
                }
            }
        }
    }

    /// Adds `value` at (row, col) (and the conjugate) of the coefficient of `var`.
    /// The LMI reads F₀ − Σ yᵢFᵢ, so a term entering with a plus sign needs `−value`.
    pub fn add_term(&mut self, var: usize, row: usize, col: usize, value: C64) {
        match self.terms.iter_mut().find(|(v, _)| *v == var) {
            Some((_, list)) => Self::push_entry(list, row, col, value),
            None => {
                let mut list = Vec::new();
                Self::push_entry(&mut list, row, col, value);
                self.terms.push((var, list));
            }
        }
    }

    /// True when every coefficient is real, allowing an unembedded real block.
    pub fn is_real(&self) -> bool {
        self.constant.iter().chain(self.terms.iter().flat_map(|(_, l)| l.iter())).all(|e| e.value.im == 0.0)
    }
}

/// maximize `objective·y` subject to every block.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    pub objective: Vec<f64>,
    pub blocks: Vec<LmiBlock>,
}

impl SdpProblem {
    pub fn new(num_vars: usize) -> Self {
        SdpProblem { objective: vec![0.0; num_vars], blocks: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_block(&mut self, block: LmiBlock) -> usize {
        self.blocks.push(block);
        self.blocks.len() - 1
    }

    /// Scalar constraint `constant + Σ coeffᵢ yᵢ ≥ 0` as a 1×1 block.
    pub fn add_linear_ge(&mut self, constant: f64, coeffs: &[(usize, f64)]) {
        let mut b = LmiBlock::new(1);
        b.add_constant(0, 0, C64::new(constant, 0.0));
        for &(v, c) in coeffs {
            b.add_term(v, 0, 0, C64::new(-c, 0.0));
        }
        self.add_block(b);
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.num_vars();
        for (k, b) in self.blocks.iter().enumerate() {
            if b.dim == 0 || b.dim > MAX_BLOCK_DIM {
                return Err(Error::Dimension(format!("block {k} has dimension {} (limit {MAX_BLOCK_DIM})", b.dim)));
            }
            let entries = b.constant.iter().chain(b.terms.iter().flat_map(|(_, l)| l.iter()));
            for e in entries {
                if e.row >= b.dim || e.col >= b.dim {
                    return Err(Error::Dimension(format!("block {k} entry ({}, {}) out of range", e.row, e.col)));
                }
                if e.row == e.col && e.value.im.abs() > 1e-10 {
                    return Err(Error::Numerical(format!("block {k} has a non-Hermitian diagonal entry")));
                }
                if !(e.value.re.is_finite() && e.value.im.is_finite()) {
                    return Err(Error::Numerical(format!("block {k} has a non-finite entry")));
                }
            }
            if let Some((v, _)) = b.terms.iter().find(|(v, _)| *v >= m) {
                return Err(Error::Dimension(format!("block {k} references variable {v} of {m}")));
            }
        }
        Ok(())
    }

    /// Largest coefficient modulus, used to scale the divergence guard.
    pub fn max_entry(&self) -> f64 {
        let blocks = self.blocks.iter().flat_map(|b| b.constant.iter().chain(b.terms.iter().flat_map(|(_, l)| l.iter())));
        blocks.map(|e| e.value.norm()).chain(self.objective.iter().map(|c| c.abs())).fold(0.0, f64::max)
    }

    /// Dense F₀ − Σ yᵢFᵢ for block `k`.
    pub fn slack(&self, k: usize, y: &[f64]) -> ComplexMatrix {
        let b = &self.blocks[k];
        let mut m = ComplexMatrix::zeros(b.dim, b.dim);
        let mut add = |e: &HermitianEntry, s: f64| {
            m[(e.row, e.col)] += e.value * s;
            if e.row != e.col {
                m[(e.col, e.row)] += e.value.conj() * s;
            }
        };
        for e in &b.constant {
            add(e, 1.0);
        }
        for (v, list) in &b.terms {
            for e in list {
                add(e, -y[*v]);
            }
        }
        m
    }
}

/// Hermitian-matrix variable: diagonal entries first, then real and imaginary parts of
/// the strict upper triangle. A traceless variable drops the first diagonal parameter and
/// sets H₀₀ = −Σ_{k≥1} H_kk; a fixed trace is then added as a constant.
#[derive(Clone, Debug)]
pub struct HermitianVar {
    pub offset: usize,
    pub dim: usize,
    pub traceless: bool,
}

impl HermitianVar {
    pub fn new(offset: usize, dim: usize) -> Self {
        HermitianVar { offset, dim, traceless: false }
    }

    pub fn traceless(offset: usize, dim: usize) -> Self {
        HermitianVar { offset, dim, traceless: true }
    }

    /// Number of real parameters.
    pub fn len(&self) -> usize {
        if self.traceless {
            self.dim * self.dim - 1
        } else {
            self.dim * self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn end(&self) -> usize {
        self.offset + self.len()
    }

    fn diag_params(&self) -> usize {
        if self.traceless {
            self.dim - 1
        } else {
            self.dim
        }
    }

    /// (variable index, coefficient) list for entry (i, j) with i ≤ j: the entry equals Σ coeff·y.
    pub fn entry(&self, i: usize, j: usize) -> Vec<(usize, C64)> {
        debug_assert!(i <= j);
        let one = C64::new(1.0, 0.0);
        if i == j {
            if !self.traceless {
                return vec![(self.offset + i, one)];
            }
            if i == 0 {
                return (1..self.dim).map(|k| (self.offset + k - 1, -one)).collect();
            }
            return vec![(self.offset + i - 1, one)];
        }
        let k = self.upper_index(i, j);
        let n = self.dim;
        let npairs = n * (n - 1) / 2;
        let base = self.offset + self.diag_params();
        vec![(base + k, one), (base + npairs + k, C64::new(0.0, 1.0))]
    }

    fn upper_index(&self, i: usize, j: usize) -> usize {
        let n = self.dim;
        i * n - i * (i + 1) / 2 + (j - i - 1)
    }

    /// Adds `sign·H` into `block` at `offset` (LMI coefficient convention handled here:
    /// the block gains +sign·H, so the stored coefficient is −sign).
    pub fn add_to_block(&self, block: &mut LmiBlock, row_offset: usize, col_offset: usize, sign: f64) {
        for i in 0..self.dim {
            for j in i..self.dim {
                for (v, c) in self.entry(i, j) {
                    block.add_term(v, row_offset + i, col_offset + j, -c * sign);
                }
            }
        }
    }

    /// Adds `sign·(1_left ⊗ H)` on the diagonal of a block starting at `offset`.
    pub fn add_kron_identity(&self, block: &mut LmiBlock, offset: usize, left: usize, sign: f64) {
        for l in 0..left {
            self.add_to_block(block, offset + l * self.dim, offset + l * self.dim, sign);
        }
    }

    /// Reconstructs the Hermitian matrix from a solution vector.
    pub fn value(&self, y: &[f64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for j in i..self.dim {
                let v: C64 = self.entry(i, j).iter().map(|&(k, c)| c * y[k]).sum();
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        m
    }

    /// Linear functional tr(H·A) for Hermitian A as (variable, coefficient) pairs.
    pub fn trace_against(&self, a: &ComplexMatrix) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in i..self.dim {
                for (v, c) in self.entry(i, j) {
                    // tr(HA) = Σ_ij H_ij A_ji; entry (i,j) and its conjugate (j,i).
                    let w = if i == j { (c * a[(j, i)]).re } else { 2.0 * (c * a[(j, i)]).re };
                    if w != 0.0 {
                        out.push((v, w));
                    }
                }
            }
        }
        out
    }
}

/// General complex-matrix variable (rows×cols), 2·rows·cols real parameters.
#[derive(Clone, Debug)]
pub struct ComplexVar {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl ComplexVar {
    pub fn count(rows: usize, cols: usize) -> usize {
        2 * rows * cols
    }

    pub fn entry(&self, i: usize, j: usize) -> [(usize, C64); 2] {
        let k = i * self.cols + j;
        [(self.offset + 2 * k, C64::new(1.0, 0.0)), (self.offset + 2 * k + 1, C64::new(0.0, 1.0))]
    }

    /// Places `sign·X` at (row_offset, col_offset) of a block, with X† implied below.
    pub fn add_to_block(&self, block: &mut LmiBlock, row_offset: usize, col_offset: usize, sign: f64) {
        for i in 0..self.rows {
            for j in 0..self.cols {
                for (v, c) in self.entry(i, j) {
                    block.add_term(v, row_offset + i, col_offset + j, -c * sign);
                }
            }
        }
    }

    pub fn value(&self, y: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| self.entry(i, j).iter().map(|&(k, c)| c * y[k]).sum())
    }

    /// Re tr(W·X) for a cols×rows matrix W, as (variable, coefficient) pairs.
    pub fn re_trace_with(&self, w: &ComplexMatrix) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let [(a, _), (b, _)] = self.entry(i, j);
                let wji = w[(j, i)];
                if wji.re != 0.0 {
                    out.push((a, wji.re));
                }
                if wji.im != 0.0 {
                    out.push((b, -wji.im));
                }
            }
        }
        out
    }
}
