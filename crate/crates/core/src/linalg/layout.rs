//! Labeled tensor-factor bookkeeping and subsystem operations.

use serde::{Deserialize, Serialize};

use super::matrix::{ComplexMatrix, C64, MAX_DIM, ZERO};
use crate::error::{Error, Result};

/// Ordered tensor factors; the first factor is the most significant index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LayoutRepr", into = "LayoutRepr")]
pub struct SystemLayout {
    factors: Vec<(String, usize)>,
}

#[derive(Serialize, Deserialize)]
struct LayoutRepr {
    factors: Vec<(String, usize)>,
}

impl TryFrom<LayoutRepr> for SystemLayout {
    type Error = Error;
    fn try_from(r: LayoutRepr) -> Result<Self> {
        SystemLayout::new(r.factors)
    }
}

impl From<SystemLayout> for LayoutRepr {
    fn from(l: SystemLayout) -> Self {
        LayoutRepr { factors: l.factors }
    }
}

impl SystemLayout {
    /// Labels must be unique, dims positive and the product at most [`MAX_DIM`].
    pub fn new<S: Into<String>>(factors: Vec<(S, usize)>) -> Result<Self> {
        let factors: Vec<(String, usize)> = factors.into_iter().map(|(l, d)| (l.into(), d)).collect();
        let mut total: usize = 1;
        for (i, (label, dim)) in factors.iter().enumerate() {
            if *dim == 0 {
                return Err(Error::Layout(format!("factor {label} has zero dimension")));
            }
            if factors[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::Layout(format!("duplicate label {label}")));
            }
            total = total.saturating_mul(*dim);
        }
        if total > MAX_DIM {
            return Err(Error::Dimension(format!("ambient dimension {total} exceeds {MAX_DIM}")));
        }
        Ok(SystemLayout { factors })
    }

    pub fn single(label: &str, dim: usize) -> Self {
        SystemLayout::new(vec![(label, dim)]).expect("valid single-factor layout")
    }

    pub fn bipartite(a: &str, da: usize, b: &str, db: usize) -> Result<Self> {
        SystemLayout::new(vec![(a, da), (b, db)])
    }

    pub fn factors(&self) -> &[(String, usize)] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(|(_, d)| d).product()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.factors.iter().map(|(l, _)| l.as_str()).collect()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::Layout(format!("unknown label {label} in {:?}", self.labels())))
    }

    pub fn contains(&self, label: &str) -> bool {
        self.factors.iter().any(|(l, _)| l == label)
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.factors[self.position(label)?].1)
    }

    /// Concatenation `self ⊗ other`.
    pub fn join(&self, other: &SystemLayout) -> Result<Self> {
        let mut f = self.factors.clone();
        f.extend(other.factors.iter().cloned());
        SystemLayout::new(f)
    }

    /// Keeps the listed labels in their original order.
    pub fn restrict(&self, keep: &[&str]) -> Result<Self> {
        for k in keep {
            self.position(k)?;
        }
        SystemLayout::new(self.factors.iter().filter(|(l, _)| keep.contains(&l.as_str())).cloned().collect())
    }

    /// Same factors with one label replaced.
    pub fn relabel(&self, from: &str, to: &str) -> Result<Self> {
        let pos = self.position(from)?;
        let mut f = self.factors.clone();
        f[pos].0 = to.to_string();
        SystemLayout::new(f)
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.factors.len()];
        for i in (0..self.factors.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.factors[i + 1].1;
        }
        s
    }

    /// Mixed-radix digits of a flat index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut d = vec![0; self.factors.len()];
        for i in (0..self.factors.len()).rev() {
            d[i] = index % self.factors[i].1;
            index /= self.factors[i].1;
        }
        d
    }

    pub fn flat_index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(self.strides()).map(|(d, s)| d * s).sum()
    }
}

fn check_square(m: &ComplexMatrix, layout: &SystemLayout) -> Result<()> {
    if !m.is_square() || m.rows() != layout.dim() {
        return Err(Error::Layout(format!(
            "{}x{} matrix does not match layout dimension {}",
            m.rows(),
            m.cols(),
            layout.dim()
        )));
    }
    Ok(())
}

/// Partial trace keeping `keep` (original order preserved).
pub fn partial_trace(m: &ComplexMatrix, layout: &SystemLayout, keep: &[&str]) -> Result<(ComplexMatrix, SystemLayout)> {
    check_square(m, layout)?;
    let kept = layout.restrict(keep)?;
    let traced_labels: Vec<&str> = layout.labels().into_iter().filter(|l| !keep.contains(l)).collect();
    let traced = layout.restrict(&traced_labels)?;
    let kpos: Vec<usize> = kept.labels().iter().map(|l| layout.position(l).unwrap()).collect();
    let tpos: Vec<usize> = traced.labels().iter().map(|l| layout.position(l).unwrap()).collect();
    let (kd, td) = (kept.dim(), traced.dim());
    let mut index = vec![0usize; kd * td];
    let mut digits = vec![0usize; layout.factors().len()];
    for k in 0..kd {
        let kdig = kept.digits(k);
        for t in 0..td {
            let tdig = traced.digits(t);
            for (p, &d) in kpos.iter().zip(&kdig) {
                digits[*p] = d;
            }
            for (p, &d) in tpos.iter().zip(&tdig) {
                digits[*p] = d;
            }
            index[k * td + t] = layout.flat_index(&digits);
        }
    }
    let mut out = ComplexMatrix::zeros(kd, kd);
    for i in 0..kd {
        for j in 0..kd {
            let mut acc = ZERO;
            for t in 0..td {
                acc += m[(index[i * td + t], index[j * td + t])];
            }
            out[(i, j)] = acc;
        }
    }
    Ok((out, kept))
}

/// Index map sending positions of `layout` to positions of the reordered layout.
fn permutation_map(layout: &SystemLayout, order: &[&str]) -> Result<(Vec<usize>, SystemLayout)> {
    if order.len() != layout.factors().len() {
        return Err(Error::Layout(format!("reorder {:?} does not cover {:?}", order, layout.labels())));
    }
    let new_layout = SystemLayout::new(
        order.iter().map(|l| layout.position(l).map(|p| layout.factors()[p].clone())).collect::<Result<Vec<_>>>()?,
    )?;
    let pos: Vec<usize> = order.iter().map(|l| layout.position(l).unwrap()).collect();
    let mut map = vec![0; layout.dim()];
    for (old, slot) in map.iter_mut().enumerate() {
        let d = layout.digits(old);
        let nd: Vec<usize> = pos.iter().map(|&p| d[p]).collect();
        *slot = new_layout.flat_index(&nd);
    }
    Ok((map, new_layout))
}

/// Reorders the tensor factors of an operator.
pub fn permute_operator(m: &ComplexMatrix, layout: &SystemLayout, order: &[&str]) -> Result<(ComplexMatrix, SystemLayout)> {
    check_square(m, layout)?;
    let (map, nl) = permutation_map(layout, order)?;
    let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    Ok((out, nl))
}

/// Reorders the tensor factors of a vector.
pub fn permute_vector(v: &[C64], layout: &SystemLayout, order: &[&str]) -> Result<(Vec<C64>, SystemLayout)> {
    if v.len() != layout.dim() {
        return Err(Error::Layout("vector length does not match layout".into()));
    }
    let (map, nl) = permutation_map(layout, order)?;
    let mut out = vec![ZERO; v.len()];
    for (i, &z) in v.iter().enumerate() {
        out[map[i]] = z;
    }
    Ok((out, nl))
}

/// Lifts an operator acting on `label` to the full space (identity elsewhere).
/// The operator may change that factor's dimension.
pub fn embed_operator(op: &ComplexMatrix, layout: &SystemLayout, label: &str) -> Result<(ComplexMatrix, SystemLayout)> {
    let pos = layout.position(label)?;
    if op.cols() != layout.factors()[pos].1 {
        return Err(Error::Layout(format!("operator input dim {} does not match factor {label}", op.cols())));
    }
    let before: usize = layout.factors()[..pos].iter().map(|(_, d)| d).product();
    let after: usize = layout.factors()[pos + 1..].iter().map(|(_, d)| d).product();
    let full = super::matrix::kron(
        &super::matrix::kron(&ComplexMatrix::identity(before), op),
        &ComplexMatrix::identity(after),
    );
    let mut f = layout.factors().to_vec();
    f[pos].1 = op.rows();
    Ok((full, SystemLayout::new(f)?))
}

/// Zeroes entries whose `label` digits differ between row and column.
pub fn dephase_operator(m: &ComplexMatrix, layout: &SystemLayout, label: &str) -> Result<ComplexMatrix> {
    check_square(m, layout)?;
    let pos = layout.position(label)?;
    let digit: Vec<usize> = (0..layout.dim()).map(|i| layout.digits(i)[pos]).collect();
    Ok(ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| if digit[i] == digit[j] { m[(i, j)] } else { ZERO }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::kron;

    fn layout3() -> SystemLayout {
        SystemLayout::new(vec![("A", 2), ("B", 3), ("C", 2)]).unwrap()
    }

    #[test]
    fn rejects_duplicate_and_oversized() {
        assert!(SystemLayout::new(vec![("A", 2), ("A", 2)]).is_err());
        assert!(SystemLayout::new(vec![("A", 4097)]).is_err());
        assert!(SystemLayout::new(vec![("A", 0)]).is_err());
    }

    #[test]
    fn layout_json_format() {
        let l = SystemLayout::new(vec![("B", 2), ("R", 2)]).unwrap();
        assert_eq!(serde_json::to_string(&l).unwrap(), r#"{"factors":[["B",2],["R",2]]}"#);
    }

    #[test]
    fn digits_round_trip() {
        let l = layout3();
        for i in 0..l.dim() {
            assert_eq!(l.flat_index(&l.digits(i)), i);
        }
    }

    #[test]
    fn partial_trace_of_product() {
        let a = ComplexMatrix::from_real_rows(&[&[0.7, 0.1], &[0.1, 0.3]]);
        let b = ComplexMatrix::from_real_rows(&[&[0.5, 0.2], &[0.2, 0.5]]);
        let l = SystemLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
        let (ra, la) = partial_trace(&kron(&a, &b), &l, &["A"]).unwrap();
        assert!(ra.max_diff(&a) < 1e-15);
        assert_eq!(la.labels(), vec!["A"]);
        assert!(partial_trace(&kron(&a, &b), &l, &["Z"]).is_err());
    }

    #[test]
    fn partial_trace_matches_explicit_contraction() {
        let l = layout3();
        let m = ComplexMatrix::from_fn(12, 12, |i, j| C64::new((i * 7 + j * 3) as f64 % 5.0, (i as f64 - j as f64) * 0.1));
        let (ra, _) = partial_trace(&m, &l, &["A"]).unwrap();
        let (rac, _) = partial_trace(&m, &l, &["A", "C"]).unwrap();
        for a1 in 0..2 {
            for a2 in 0..2 {
                let mut acc = ZERO;
                for b in 0..3 {
                    for c in 0..2 {
                        acc += m[(a1 * 6 + b * 2 + c, a2 * 6 + b * 2 + c)];
                    }
                }
                assert!((ra[(a1, a2)] - acc).norm() < 1e-12);
            }
        }
        for a1 in 0..2 {
            for c1 in 0..2 {
                for a2 in 0..2 {
                    for c2 in 0..2 {
                        let mut acc = ZERO;
                        for b in 0..3 {
                            acc += m[(a1 * 6 + b * 2 + c1, a2 * 6 + b * 2 + c2)];
                        }
                        assert!((rac[(a1 * 2 + c1, a2 * 2 + c2)] - acc).norm() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn permute_swaps_kron_order() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = ComplexMatrix::from_fn(3, 3, |i, j| C64::new((i + 2 * j) as f64, 1.0));
        let l = SystemLayout::new(vec![("A", 2), ("B", 3)]).unwrap();
        let (p, pl) = permute_operator(&kron(&a, &b), &l, &["B", "A"]).unwrap();
        assert!(p.max_diff(&kron(&b, &a)) < 1e-15);
        assert_eq!(pl.labels(), vec!["B", "A"]);
    }

    #[test]
    fn embed_matches_kron() {
        let l = layout3();
        let op = ComplexMatrix::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64));
        let (e, _) = embed_operator(&op, &l, "B").unwrap();
        let expect = kron(&kron(&ComplexMatrix::identity(2), &op), &ComplexMatrix::identity(2));
        assert_eq!(e, expect);
    }
}
