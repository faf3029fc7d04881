//! Hash functions f: C → L on computational-basis labels, and the candidate
//! families searched over.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::random::rng_from_seed;

/// A map from letters `0..table.len()` to `0..l_size`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HashFunction {
    table: Vec<usize>,
    l_size: usize,
}

impl HashFunction {
    pub fn new(table: Vec<usize>, l_size: usize) -> Result<Self> {
        if table.is_empty() || l_size == 0 {
            return Err(Error::Domain("hash needs a nonempty domain and range".into()));
        }
        if l_size > table.len() {
            return Err(Error::Domain(format!("|L| = {l_size} exceeds |C| = {}", table.len())));
        }
        if let Some(&bad) = table.iter().find(|&&v| v >= l_size) {
            return Err(Error::Domain(format!("hash value {bad} outside 0..{l_size}")));
        }
        Ok(HashFunction { table, l_size })
    }

    pub fn identity(n: usize) -> Result<Self> {
        HashFunction::new((0..n).collect(), n)
    }

    pub fn constant(n: usize) -> Result<Self> {
        HashFunction::new(vec![0; n], 1)
    }

    pub fn table(&self) -> &[usize] {
        &self.table
    }

    pub fn domain_size(&self) -> usize {
        self.table.len()
    }

    pub fn l_size(&self) -> usize {
        self.l_size
    }

    pub fn apply(&self, c: usize) -> usize {
        self.table[c]
    }

    /// Letters hashed to `l`.
    pub fn preimage(&self, l: usize) -> Vec<usize> {
        (0..self.table.len()).filter(|&c| self.table[c] == l).collect()
    }

    /// `self ∘ perm`, i.e. c ↦ f(perm[c]).
    pub fn compose_permutation(&self, perm: &[usize]) -> Result<Self> {
        let n = self.table.len();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Domain("not a permutation of the hash domain".into()));
        }
        HashFunction::new(perm.iter().map(|&p| self.table[p]).collect(), self.l_size)
    }

    /// Relabels the range so that first occurrences appear in increasing order.
    /// Two hashes with the same canonical form give the same secrecy.
    pub fn canonical(&self) -> Self {
        let mut map = vec![usize::MAX; self.l_size];
        let mut next = 0;
        let table = self
            .table
            .iter()
            .map(|&v| {
                if map[v] == usize::MAX {
                    map[v] = next;
                    next += 1;
                }
                map[v]
            })
            .collect();
        HashFunction { table, l_size: self.l_size }
    }
}

/// All restricted growth strings of length `n` with at most `l_size` distinct
/// values, in lexicographic order, as hashes into `0..l_size`.
///
/// Every hash is a relabeling of exactly one of these, so the list covers all
/// |L|^|C| functions up to the output relabelings that leave secrecy unchanged.
pub fn restricted_growth_hashes(n: usize, l_size: usize) -> Result<Vec<HashFunction>> {
    if n == 0 || l_size == 0 || l_size > n {
        return Err(Error::Domain(format!("no hashes from {n} letters onto {l_size}")));
    }
    let mut out = Vec::new();
    let mut s = vec![0usize; n];
    fn rec(s: &mut [usize], pos: usize, max_used: usize, l_size: usize, out: &mut Vec<HashFunction>) {
        if pos == s.len() {
            out.push(HashFunction { table: s.to_vec(), l_size });
            return;
        }
        let top = (max_used + 1).min(l_size - 1);
        for v in 0..=top {
            s[pos] = v;
            rec(s, pos + 1, max_used.max(v), l_size, out);
        }
    }
    // The first letter is always 0.
    rec(&mut s, 1, 0, l_size, &mut out);
    Ok(out)
}

/// Number of seeded draws from the two-universal family in sampled mode.
pub const SAMPLED_HASH_COUNT: usize = 10_000;

fn is_prime(p: usize) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// Smallest prime not below `n`.
pub fn next_prime(n: usize) -> usize {
    (n.max(2)..).find(|&p| is_prime(p)).expect("primes are unbounded")
}

/// Distinct canonical hashes drawn from h(x) = ((a·x + b) mod p) mod |L|,
/// with p the smallest prime ≥ |C|, a ∈ 1..p, b ∈ 0..p. Sorted lexicographically.
pub fn sampled_universal_hashes(n: usize, l_size: usize, samples: usize, seed: u64) -> Result<Vec<HashFunction>> {
    if n == 0 || l_size == 0 || l_size > n {
        return Err(Error::Domain(format!("no hashes from {n} letters onto {l_size}")));
    }
    let p = next_prime(n);
    let mut rng = rng_from_seed(seed);
    let mut set = BTreeSet::new();
    for _ in 0..samples {
        let a = rng.random_range(1..p);
        let b = rng.random_range(0..p);
        let table = (0..n).map(|x| ((a * x + b) % p) % l_size).collect();
        set.insert(HashFunction { table, l_size }.canonical());
    }
    Ok(set.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rgs_counts_are_bell_numbers() {
        // Partitions of 4 letters into at most k blocks: 1, 8, 14, 15.
        let counts: Vec<usize> = (1..=4).map(|k| restricted_growth_hashes(4, k).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 8, 14, 15]);
        assert_eq!(restricted_growth_hashes(6, 6).unwrap().len(), 203);
    }

    #[test]
    fn rgs_is_lexicographic_and_canonical() {
        let v = restricted_growth_hashes(5, 3).unwrap();
        assert!(v.windows(2).all(|w| w[0].table() < w[1].table()));
        assert!(v.iter().all(|h| h.canonical() == *h));
    }

    #[test]
    fn validation_and_composition() {
        assert!(HashFunction::new(vec![0, 1], 3).is_err());
        assert!(HashFunction::new(vec![0, 2], 2).is_err());
        let f = HashFunction::new(vec![0, 0, 1], 2).unwrap();
        assert_eq!(f.preimage(0), vec![0, 1]);
        let g = f.compose_permutation(&[2, 0, 1]).unwrap();
        assert_eq!(g.table(), &[1, 0, 0]);
        assert_eq!(g.canonical().table(), &[0, 1, 1]);
        assert!(f.compose_permutation(&[0, 0, 1]).is_err());
    }

    #[test]
    fn sampled_family_is_deterministic() {
        assert_eq!(next_prime(8), 11);
        let a = sampled_universal_hashes(8, 3, 500, 9).unwrap();
        let b = sampled_universal_hashes(8, 3, 500, 9).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty() && a.iter().all(|h| h.l_size() == 3));
    }
}
