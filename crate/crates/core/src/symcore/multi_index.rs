use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use smallvec::SmallVec;

use crate::error::{Error, Result};

/// A multi-index `I ∈ ℕ^m`: `I(i)` counts the copies of base direction `i`.
///
/// Directions are 0-based internally; rendering adds one.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MultiIndex(SmallVec<[u8; 4]>);

impl MultiIndex {
    pub fn zeros(m: usize) -> Self {
        MultiIndex(SmallVec::from_elem(0, m))
    }

    pub fn unit(m: usize, i: usize) -> Self {
        let mut mi = Self::zeros(m);
        mi.0[i] = 1;
        mi
    }

    pub fn from_slice(entries: &[u8]) -> Self {
        MultiIndex(SmallVec::from_slice(entries))
    }

    /// Multi-index counting the directions in `dirs` (with repetition).
    pub fn from_directions(m: usize, dirs: &[usize]) -> Self {
        let mut mi = Self::zeros(m);
        for &d in dirs {
            mi.0[d] += 1;
        }
        mi
    }

    /// Chart dimension `m`.
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u8] {
        &self.0
    }

    pub fn get(&self, i: usize) -> u8 {
        self.0[i]
    }

    /// `|I|`, the length of the multi-index.
    pub fn length(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    /// `I!` = product of the entry factorials.
    pub fn factorial(&self) -> BigUint {
        self.0
            .iter()
            .fold(BigUint::one(), |acc, &e| acc * factorial(e as usize))
    }

    /// `|I|!/I!`.
    pub fn weight(&self) -> BigUint {
        factorial(self.length()) / self.factorial()
    }

    pub fn increment(&self, i: usize) -> Self {
        let mut out = self.clone();
        out.0[i] += 1;
        out
    }

    pub fn decrement(&self, i: usize) -> Option<Self> {
        if self.0[i] == 0 {
            return None;
        }
        let mut out = self.clone();
        out.0[i] -= 1;
        Some(out)
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.same_dim(other)?;
        Ok(MultiIndex(
            self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect(),
        ))
    }

    /// Entrywise sum; panics on a dimension mismatch.
    pub fn add(&self, other: &Self) -> Self {
        self.checked_add(other).expect("multi-index dimension mismatch")
    }

    /// `I − K`, absent when any entry would go negative.
    pub fn checked_sub(&self, other: &Self) -> Result<Option<Self>> {
        self.same_dim(other)?;
        let mut out = SmallVec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.checked_sub(*b) {
                Some(d) => out.push(d),
                None => return Ok(None),
            }
        }
        Ok(Some(MultiIndex(out)))
    }

    pub fn sub(&self, other: &Self) -> Option<Self> {
        self.checked_sub(other).expect("multi-index dimension mismatch")
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// Directions listed with multiplicity, ascending.
    pub fn directions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.length());
        for (i, &e) in self.0.iter().enumerate() {
            for _ in 0..e {
                out.push(i);
            }
        }
        out
    }

    /// All `K` with `0 ≤ K ≤ self`.
    pub fn sub_indices(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zeros(self.dim())];
        for i in 0..self.dim() {
            let mut next = Vec::with_capacity(out.len() * (self.0[i] as usize + 1));
            for base in &out {
                for e in 0..=self.0[i] {
                    let mut k = base.clone();
                    k.0[i] = e;
                    next.push(k);
                }
            }
            out = next;
        }
        out
    }

    /// Every multi-index of dimension `m` and length exactly `len`, in lexicographic order.
    pub fn all_of_length(m: usize, len: usize) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = MultiIndex::zeros(m);
        fill(&mut out, &mut cur, 0, len);
        out.sort();
        out
    }

    /// Every multi-index of dimension `m` with length at most `max`.
    pub fn all_up_to(m: usize, max: usize) -> Vec<MultiIndex> {
        (0..=max).flat_map(|l| Self::all_of_length(m, l)).collect()
    }

    fn same_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

fn fill(out: &mut Vec<MultiIndex>, cur: &mut MultiIndex, pos: usize, remaining: usize) {
    let m = cur.dim();
    if m == 0 {
        if remaining == 0 {
            out.push(cur.clone());
        }
        return;
    }
    if pos == m - 1 {
        cur.0[pos] = remaining as u8;
        out.push(cur.clone());
        cur.0[pos] = 0;
        return;
    }
    for e in 0..=remaining {
        cur.0[pos] = e as u8;
        fill(out, cur, pos + 1, remaining - e);
    }
    cur.0[pos] = 0;
}

pub fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(e: &[u8]) -> MultiIndex {
        MultiIndex::from_slice(e)
    }

    #[test]
    fn arithmetic() {
        assert_eq!(mi(&[2, 1]).add(&mi(&[0, 1])), mi(&[2, 2]));
        assert_eq!(mi(&[2, 1]).weight(), BigUint::from(3u32));
        assert_eq!(mi(&[1, 0]).sub(&mi(&[0, 1])), None);
        assert_eq!(mi(&[2, 2]).factorial(), BigUint::from(4u32));
        assert_eq!(mi(&[2, 1]).length(), 3);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            mi(&[1, 0]).checked_add(&mi(&[1])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn enumeration_counts() {
        // C(len + m - 1, m - 1)
        assert_eq!(MultiIndex::all_of_length(2, 3).len(), 4);
        assert_eq!(MultiIndex::all_of_length(3, 2).len(), 6);
        assert_eq!(MultiIndex::all_up_to(2, 2).len(), 6);
        assert_eq!(mi(&[2, 1]).sub_indices().len(), 6);
    }
}
