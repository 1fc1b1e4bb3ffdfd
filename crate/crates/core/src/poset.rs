//! k-subsets of `[n]`, the shift order and its lattice operations.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::binom::binomial;
use crate::error::{Error, Result};

/// A nonempty strictly increasing list of 1-based elements.
///
/// The ground set size `n` is carried by context. Container ordering is
/// colex order (sets of equal size compare by their largest differing element).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct KSet(Vec<u8>);

impl KSet {
    /// Validates that `elems` is nonempty, strictly increasing and starts at 1 or later.
    pub fn new(elems: &[u8]) -> Result<Self> {
        if elems.is_empty() {
            return Err(Error::InvalidKSet("k must be at least 1".into()));
        }
        if elems[0] == 0 {
            return Err(Error::InvalidKSet("elements are 1-based".into()));
        }
        if elems.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidKSet(format!("{elems:?} is not strictly increasing")));
        }
        Ok(Self(elems.to_vec()))
    }

    /// Like [`new`](Self::new) and additionally checks every element is at most `n`.
    pub fn new_in(elems: &[u8], n: usize) -> Result<Self> {
        let s = Self::new(elems)?;
        s.check_within(n)?;
        Ok(s)
    }

    pub(crate) fn from_vec_unchecked(v: Vec<u8>) -> Self {
        debug_assert!(Self::new(&v).is_ok());
        Self(v)
    }

    pub fn check_within(&self, n: usize) -> Result<()> {
        if *self.0.last().unwrap() as usize > n {
            return Err(Error::InvalidKSet(format!("{self} is not a subset of [{n}]")));
        }
        Ok(())
    }

    /// `{1, 2, ..., k}`, the maximum of the shift order.
    pub fn first(k: usize) -> Self {
        Self((1..=k as u8).collect())
    }

    /// `{n-k+1, ..., n}`, the minimum of the shift order.
    pub fn last(n: usize, k: usize) -> Self {
        Self(((n - k + 1) as u8..=n as u8).collect())
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn elements(&self) -> &[u8] {
        &self.0
    }

    pub fn contains(&self, i: u8) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// True iff `self ⪰ other`: every element is positionwise at most the other's.
    ///
    /// Sets of different size are never comparable; use [`shift_leq`] to get an error instead.
    pub fn is_left_of(&self, other: &KSet) -> bool {
        self.k() == other.k() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// The image under `i -> n + 1 - i`, which reverses the shift order.
    pub fn reflect(&self, n: usize) -> KSet {
        KSet(self.0.iter().rev().map(|&i| (n + 1) as u8 - i).collect())
    }

    pub fn colex_rank(&self) -> u64 {
        colex_rank(self)
    }

    /// `Σ_{i∈S} x_i`.
    pub fn sum_of<T>(&self, x: &[T]) -> T
    where
        T: Clone + std::iter::Sum<T>,
    {
        self.0.iter().map(|&i| x[i as usize - 1].clone()).sum()
    }
}

impl fmt::Display for KSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{e}")?;
        }
        f.write_str("}")
    }
}

impl fmt::Debug for KSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for KSet {
    type Err = Error;

    /// Parses `{1,6,11}`; whitespace around elements is ignored.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| Error::InvalidKSet(format!("expected braces in {s:?}")))?;
        let elems = inner
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u8>()
                    .map_err(|e| Error::InvalidKSet(format!("{t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        KSet::new(&elems)
    }
}

impl Ord for KSet {
    fn cmp(&self, other: &Self) -> Ordering {
        self.k()
            .cmp(&other.k())
            .then_with(|| self.0.iter().rev().cmp(other.0.iter().rev()))
    }
}

impl PartialOrd for KSet {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Serialize for KSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for KSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parts `a_1, ..., a_{k+1}` of `n + 1`, all positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Composition(Vec<u32>);

impl Composition {
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.len() < 2 || parts.contains(&0) {
            return Err(Error::InvalidParameters(format!("{parts:?} is not a composition into at least two positive parts")));
        }
        Ok(Self(parts))
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    /// The `n` of the ground set, one less than the sum of the parts.
    pub fn n(&self) -> usize {
        self.0.iter().map(|&p| p as usize).sum::<usize>() - 1
    }

    /// Prefix-sum dominance: every proper prefix sum of `self` is at most that of `other`.
    pub fn dominated_by(&self, other: &Composition) -> bool {
        if self.0.len() != other.0.len() {
            return false;
        }
        let (mut a, mut b) = (0u32, 0u32);
        for (x, y) in self.0.iter().zip(&other.0) {
            a += x;
            b += y;
            if a > b {
                return false;
            }
        }
        true
    }

    /// The k-set whose elements are the first `k` prefix sums.
    pub fn to_kset(&self) -> KSet {
        let mut acc = 0u32;
        let elems = self.0[..self.0.len() - 1]
            .iter()
            .map(|p| {
                acc += p;
                acc as u8
            })
            .collect();
        KSet::from_vec_unchecked(elems)
    }
}

/// Which side of a set the cover neighbors lie on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Sets covering `S` from the left (one element decremented).
    Left,
    /// Sets covered by `S` (one element incremented).
    Right,
}

fn check_same_k(s: &KSet, t: &KSet) -> Result<()> {
    if s.k() != t.k() {
        return Err(Error::CardinalityMismatch { left: s.k(), right: t.k() });
    }
    Ok(())
}

/// True iff `s ⪰ t`.
pub fn shift_leq(s: &KSet, t: &KSet) -> Result<bool> {
    check_same_k(s, t)?;
    Ok(s.is_left_of(t))
}

fn positionwise(family: &[KSet], pick: fn(u8, u8) -> u8) -> Result<KSet> {
    let (first, rest) = family.split_first().ok_or(Error::EmptyFamily)?;
    let mut acc = first.0.clone();
    for s in rest {
        check_same_k(first, s)?;
        for (a, &b) in acc.iter_mut().zip(&s.0) {
            *a = pick(*a, b);
        }
    }
    Ok(KSet(acc))
}

/// Positionwise minimum, the least set lying left of every member.
pub fn join(family: &[KSet]) -> Result<KSet> {
    positionwise(family, std::cmp::min)
}

/// Positionwise maximum, the greatest set lying right of every member.
pub fn meet(family: &[KSet]) -> Result<KSet> {
    positionwise(family, std::cmp::max)
}

/// `Σ_ℓ C(i_ℓ - 1, ℓ)`, independent of `n`.
pub fn colex_rank(s: &KSet) -> u64 {
    s.0.iter()
        .enumerate()
        .map(|(l, &i)| binomial(i as u64 - 1, l as u64 + 1).expect("rank overflow"))
        .sum()
}

/// Lexicographic rank among the k-subsets of `[n]`.
pub fn lex_rank(s: &KSet, n: usize) -> u64 {
    let k = s.k() as u64;
    let mut prev = 0u64;
    let mut r = 0u64;
    for (l, &i) in s.0.iter().enumerate() {
        let l = l as u64 + 1;
        for j in prev + 1..i as u64 {
            r += binomial(n as u64 - j, k - l).expect("rank overflow");
        }
        prev = i as u64;
    }
    r
}

/// Inverse of [`colex_rank`] over the k-subsets of `[n]`.
pub fn colex_unrank(mut r: u64, n: usize, k: usize) -> Result<KSet> {
    if k == 0 || k > n || n > u8::MAX as usize {
        return Err(Error::InvalidParameters(format!("no k-subsets for n={n}, k={k}")));
    }
    let total = binomial(n as u64, k as u64).ok_or(Error::UniverseTooLarge { n, k })?;
    if r >= total {
        return Err(Error::RankOutOfRange { rank: r, n, k });
    }
    let mut elems = vec![0u8; k];
    let mut top = n as u64;
    for l in (1..=k as u64).rev() {
        // largest c with C(c, l) <= r, then element c + 1
        let mut c = top - 1;
        while binomial(c, l).unwrap() > r {
            c -= 1;
        }
        r -= binomial(c, l).unwrap();
        elems[l as usize - 1] = (c + 1) as u8;
        top = c;
    }
    Ok(KSet(elems))
}

/// Next set in lexicographic order, or `None` after `{n-k+1, ..., n}`.
pub fn lex_successor(s: &KSet, n: usize) -> Option<KSet> {
    let k = s.k();
    let mut v = s.0.clone();
    let p = (0..k).rev().find(|&p| (v[p] as usize) < n - (k - 1 - p))?;
    v[p] += 1;
    for q in p + 1..k {
        v[q] = v[q - 1] + 1;
    }
    Some(KSet(v))
}

/// Next set in colex order, or `None` after `{n-k+1, ..., n}`.
pub fn colex_successor(s: &KSet, n: usize) -> Option<KSet> {
    let mut v = s.0.clone();
    colex_successor_in_place(&mut v, n).then_some(KSet(v))
}

pub(crate) fn colex_successor_in_place(v: &mut [u8], n: usize) -> bool {
    let k = v.len();
    let Some(p) = (0..k).find(|&p| {
        let limit = if p + 1 < k { v[p + 1] as usize } else { n + 1 };
        (v[p] as usize) + 1 < limit
    }) else {
        return false;
    };
    v[p] += 1;
    for (q, e) in v[..p].iter_mut().enumerate() {
        *e = q as u8 + 1;
    }
    true
}

/// `a_1 = i_1`, `a_ℓ = i_ℓ - i_{ℓ-1}`, `a_{k+1} = n + 1 - i_k`.
pub fn to_composition(s: &KSet, n: usize) -> Composition {
    let mut parts = Vec::with_capacity(s.k() + 1);
    let mut prev = 0u32;
    for &i in &s.0 {
        parts.push(i as u32 - prev);
        prev = i as u32;
    }
    parts.push(n as u32 + 1 - prev);
    Composition(parts)
}

/// Hasse neighbors of `s` on the given side.
pub fn cover_neighbors(s: &KSet, n: usize, direction: Direction) -> Vec<KSet> {
    let k = s.k();
    let v = &s.0;
    let mut out = Vec::new();
    for p in 0..k {
        let free = match direction {
            Direction::Left => v[p] > 1 && (p == 0 || v[p - 1] + 1 < v[p]),
            Direction::Right => (v[p] as usize) < n && (p + 1 == k || v[p] + 1 < v[p + 1]),
        };
        if free {
            let mut w = v.clone();
            match direction {
                Direction::Left => w[p] -= 1,
                Direction::Right => w[p] += 1,
            }
            out.push(KSet(w));
        }
    }
    out
}
