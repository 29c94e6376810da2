//! Exponent vectors and the graded monomial order used everywhere.
//!
//! Monomials are ordered by total degree first; inside one degree the
//! exponent vectors are listed in descending lexicographic order, so
//! `1 < y1 < … < yn < y1^2 < y1y2 < …`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// Unit vector `e_i`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u32> {
        self.0
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        debug_assert_eq!(self.len(), other.len());
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `self - other` when `other <= self` componentwise.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if self.len() != other.len() {
            return None;
        }
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    pub fn divides(&self, other: &MultiIndex) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `self + e_i`.
    pub fn bump(&self, i: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e[i] += 1;
        MultiIndex(e)
    }

    /// `self - e_i`, if `self_i > 0`.
    pub fn lower(&self, i: usize) -> Option<MultiIndex> {
        if self.0[i] == 0 {
            return None;
        }
        let mut e = self.0.clone();
        e[i] -= 1;
        Some(MultiIndex(e))
    }

    /// Prepends the homogenizing exponent `d - |α|`.
    pub fn homogenize(&self, d: u32) -> Option<MultiIndex> {
        let deg = self.degree();
        if deg > d {
            return None;
        }
        let mut e = Vec::with_capacity(self.len() + 1);
        e.push(d - deg);
        e.extend_from_slice(&self.0);
        Some(MultiIndex(e))
    }

    /// Drops the leading exponent.
    pub fn dehomogenize(&self) -> MultiIndex {
        MultiIndex(self.0[1..].to_vec())
    }

    /// Multinomial coefficient `d! / ((d-|α|)! α_1! ⋯ α_n!)`.
    pub fn multinomial(&self, d: u32) -> u128 {
        let mut acc: u128 = 1;
        let mut used = 0u32;
        for &a in &self.0 {
            used += a;
            acc *= binomial_u128(used as u64, a as u64);
        }
        acc * binomial_u128(d as u64, used as u64)
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl From<&[u32]> for MultiIndex {
    fn from(v: &[u32]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl<const N: usize> From<[u32; N]> for MultiIndex {
    fn from(v: [u32; N]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            // descending lex inside a degree
            .then_with(|| other.0.cmp(&self.0))
            .then_with(|| self.len().cmp(&other.len()))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Graded order with the length check surfaced as an error.
pub fn canonical_order(a: &MultiIndex, b: &MultiIndex) -> Result<Ordering> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { expected: a.len(), found: b.len() });
    }
    Ok(a.cmp(b))
}

pub fn binomial(n: usize, k: usize) -> usize {
    binomial_u128(n as u64, k as u64) as usize
}

fn binomial_u128(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// All exponent vectors of length `n` with `|α| = deg`, descending lex.
pub fn monomials_of_degree(n: usize, deg: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    if n == 0 {
        if deg == 0 {
            out.push(MultiIndex(vec![]));
        }
        return out;
    }
    let mut cur = vec![0u32; n];
    fill(&mut cur, 0, deg, &mut out);
    out
}

fn fill(cur: &mut Vec<u32>, pos: usize, rest: u32, out: &mut Vec<MultiIndex>) {
    if pos + 1 == cur.len() {
        cur[pos] = rest;
        out.push(MultiIndex(cur.clone()));
        return;
    }
    for v in (0..=rest).rev() {
        cur[pos] = v;
        fill(cur, pos + 1, rest - v, out);
    }
    cur[pos] = 0;
}

/// All exponent vectors of length `n` with `|α| ≤ d`, in canonical order.
pub fn monomials_up_to(n: usize, d: u32) -> Vec<MultiIndex> {
    (0..=d).flat_map(|k| monomials_of_degree(n, k)).collect()
}

/// Number of exponent vectors of length `n` with `|α| ≤ d`.
pub fn count_up_to(n: usize, d: u32) -> usize {
    binomial(n + d as usize, d as usize)
}

/// Position of `α` in [`monomials_up_to`]`(n, ·)`.
pub fn rank_in_order(alpha: &[u32]) -> usize {
    let n = alpha.len();
    let deg: u32 = alpha.iter().sum();
    if n == 0 {
        return 0;
    }
    let before = if deg == 0 { 0 } else { count_up_to(n, deg - 1) };
    before + rank_within_degree(alpha, deg)
}

fn rank_within_degree(alpha: &[u32], deg: u32) -> usize {
    let n = alpha.len();
    if n <= 1 {
        return 0;
    }
    // compositions with a larger leading exponent come first
    let mut skipped = 0;
    for lead in (alpha[0] + 1)..=deg {
        skipped += compositions(deg - lead, n - 1);
    }
    skipped + rank_within_degree(&alpha[1..], deg - alpha[0])
}

/// Number of exponent vectors of length `parts` summing to `total`.
fn compositions(total: u32, parts: usize) -> usize {
    if parts == 0 {
        return usize::from(total == 0);
    }
    binomial(total as usize + parts - 1, parts - 1)
}
