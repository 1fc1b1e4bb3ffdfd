//! Dense per-`(n, k)` enumeration of all k-subsets, indexed by colex rank.

use std::sync::OnceLock;

use crate::binom::BinomialTable;
use crate::error::{Error, Result};
use crate::poset::{colex_successor_in_place, KSet};

/// Largest universe enumerated densely.
pub const MAX_SETS: u64 = 1 << 28;

/// Hasse-digraph edge budget for the BFS counting strategy.
pub const HASSE_EDGE_BUDGET: u64 = 1 << 24;

/// Every k-subset of `[n]` with its shift counts, indexed by colex rank.
#[derive(Debug)]
pub struct Universe {
    n: usize,
    k: usize,
    binom: BinomialTable,
    size: usize,
    elems: Vec<u8>,
    lex_order: Vec<u32>,
    left: Vec<u64>,
    right: Vec<u64>,
    hasse: OnceLock<Hasse>,
}

/// Adjacency lists of the cover relation in both directions.
#[derive(Debug)]
pub struct Hasse {
    left_off: Vec<u32>,
    left: Vec<u32>,
    right_off: Vec<u32>,
    right: Vec<u32>,
}

impl Hasse {
    pub fn left(&self, r: u32) -> &[u32] {
        &self.left[self.left_off[r as usize] as usize..self.left_off[r as usize + 1] as usize]
    }

    pub fn right(&self, r: u32) -> &[u32] {
        &self.right[self.right_off[r as usize] as usize..self.right_off[r as usize + 1] as usize]
    }
}

impl Universe {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidParameters(format!("need 1 <= k <= n, got n={n}, k={k}")));
        }
        if n > 127 {
            return Err(Error::UniverseTooLarge { n, k });
        }
        let binom = BinomialTable::new(n, k).ok_or(Error::UniverseTooLarge { n, k })?;
        let total = binom.get(n, k);
        if total > MAX_SETS {
            return Err(Error::UniverseTooLarge { n, k });
        }
        let size = total as usize;
        let mut elems = Vec::with_capacity(size * k);
        let mut cur: Vec<u8> = (1..=k as u8).collect();
        loop {
            elems.extend_from_slice(&cur);
            if !colex_successor_in_place(&mut cur, n) {
                break;
            }
        }
        debug_assert_eq!(elems.len(), size * k);
        let mut lex_order: Vec<u32> = (0..size as u32).collect();
        lex_order.sort_unstable_by(|&a, &b| {
            let (a, b) = (a as usize * k, b as usize * k);
            elems[a..a + k].cmp(&elems[b..b + k])
        });
        let mut u = Self {
            n,
            k,
            binom,
            size,
            elems,
            lex_order,
            left: Vec::new(),
            right: Vec::new(),
            hasse: OnceLock::new(),
        };
        let mut scratch = vec![0u64; k + 1];
        let mut refl = vec![0u8; k];
        let mut left = Vec::with_capacity(size);
        let mut right = Vec::with_capacity(size);
        for r in 0..size {
            let s = u.elements(r as u32);
            left.push(left_count_with(&u.binom, s, &mut scratch));
            for (d, &e) in refl.iter_mut().zip(s.iter().rev()) {
                *d = (n + 1) as u8 - e;
            }
            right.push(left_count_with(&u.binom, &refl, &mut scratch));
        }
        u.left = left;
        u.right = right;
        Ok(u)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `C(n, k)`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn binom(&self) -> &BinomialTable {
        &self.binom
    }

    /// Elements of the set with colex rank `r`.
    #[inline]
    pub fn elements(&self, r: u32) -> &[u8] {
        let a = r as usize * self.k;
        &self.elems[a..a + self.k]
    }

    pub fn kset(&self, r: u32) -> KSet {
        KSet::from_vec_unchecked(self.elements(r).to_vec())
    }

    /// Colex rank of `s`, which must be a k-subset of `[n]`.
    pub fn rank(&self, s: &KSet) -> Result<u32> {
        if s.k() != self.k {
            return Err(Error::CardinalityMismatch { left: s.k(), right: self.k });
        }
        s.check_within(self.n)?;
        Ok(self.rank_of(s.elements()))
    }

    #[inline]
    pub fn rank_of(&self, elems: &[u8]) -> u32 {
        elems
            .iter()
            .enumerate()
            .map(|(l, &i)| self.binom.get(i as usize - 1, l + 1))
            .sum::<u64>() as u32
    }

    /// Ranks in lexicographic order of the underlying sets.
    pub fn lex_order(&self) -> &[u32] {
        &self.lex_order
    }

    /// `L_k` of the set with rank `r`.
    #[inline]
    pub fn left_count(&self, r: u32) -> u64 {
        self.left[r as usize]
    }

    /// `R_k` of the set with rank `r`.
    #[inline]
    pub fn right_count(&self, r: u32) -> u64 {
        self.right[r as usize]
    }

    /// Calls `f(position, neighbor rank)` for every left cover of `r`.
    #[inline]
    pub fn for_each_left_cover(&self, r: u32, mut f: impl FnMut(usize, u32)) {
        let s = self.elements(r);
        for p in 0..self.k {
            let e = s[p];
            if e > 1 && (p == 0 || s[p - 1] + 1 < e) {
                // C(e-1, p+1) - C(e-2, p+1) = C(e-2, p)
                f(p, r - self.binom.get(e as usize - 2, p) as u32);
            }
        }
    }

    /// Calls `f(position, neighbor rank)` for every right cover of `r`.
    #[inline]
    pub fn for_each_right_cover(&self, r: u32, mut f: impl FnMut(usize, u32)) {
        let s = self.elements(r);
        for p in 0..self.k {
            let e = s[p];
            if (e as usize) < self.n && (p + 1 == self.k || e + 1 < s[p + 1]) {
                f(p, r + self.binom.get(e as usize - 1, p) as u32);
            }
        }
    }

    /// Rank of the set obtained from `r` by decrementing the positions in `mask`.
    ///
    /// The positions must all be left-cover moves of `r`; the result is the
    /// join of the corresponding covers.
    #[inline]
    pub fn join_of_left_covers(&self, r: u32, mask: u32) -> u32 {
        let s = self.elements(r);
        let mut out = r as u64;
        for p in 0..self.k {
            if mask >> p & 1 == 1 {
                out -= self.binom.get(s[p] as usize - 2, p);
            }
        }
        out as u32
    }

    /// Rank of the set obtained from `r` by incrementing the positions in `mask`.
    #[inline]
    pub fn meet_of_right_covers(&self, r: u32, mask: u32) -> u32 {
        let s = self.elements(r);
        let mut out = r as u64;
        for p in 0..self.k {
            if mask >> p & 1 == 1 {
                out += self.binom.get(s[p] as usize - 1, p);
            }
        }
        out as u32
    }

    /// Rank of the positionwise minimum of two sets.
    #[inline]
    pub fn join_ranks(&self, a: u32, b: u32) -> u32 {
        let (x, y) = (self.elements(a), self.elements(b));
        (0..self.k)
            .map(|l| self.binom.get(x[l].min(y[l]) as usize - 1, l + 1))
            .sum::<u64>() as u32
    }

    /// Rank of the positionwise maximum of two sets.
    #[inline]
    pub fn meet_ranks(&self, a: u32, b: u32) -> u32 {
        let (x, y) = (self.elements(a), self.elements(b));
        (0..self.k)
            .map(|l| self.binom.get(x[l].max(y[l]) as usize - 1, l + 1))
            .sum::<u64>() as u32
    }

    /// Estimated number of Hasse edges stored per direction.
    pub fn hasse_edge_estimate(&self) -> u64 {
        self.size as u64 * self.k as u64
    }

    /// Materializes the cover digraph, or `None` when it exceeds [`HASSE_EDGE_BUDGET`].
    pub fn hasse(&self) -> Option<&Hasse> {
        if self.hasse_edge_estimate() > HASSE_EDGE_BUDGET {
            return None;
        }
        Some(self.hasse.get_or_init(|| {
            let mut h = Hasse {
                left_off: Vec::with_capacity(self.size + 1),
                left: Vec::new(),
                right_off: Vec::with_capacity(self.size + 1),
                right: Vec::new(),
            };
            h.left_off.push(0);
            h.right_off.push(0);
            for r in 0..self.size as u32 {
                self.for_each_left_cover(r, |_, t| h.left.push(t));
                self.for_each_right_cover(r, |_, t| h.right.push(t));
                h.left_off.push(h.left.len() as u32);
                h.right_off.push(h.right.len() as u32);
            }
            h
        }))
    }
}

/// `L_k(S)` from the prefix recursion; `prefix` needs room for `k + 1` values.
pub(crate) fn left_count_with(binom: &BinomialTable, s: &[u8], prefix: &mut [u64]) -> u64 {
    let c = |a: i64, b: usize| binom.get_signed(a, b) as i128;
    let k = s.len();
    // prefix[l] = L_l(S_l) for the prefix of length l
    for l in 1..=k {
        let il = s[l - 1] as i64;
        let mut v = c(il, l) - c(il - s[0] as i64, l);
        for j in 1..l.saturating_sub(1) {
            v -= prefix[j] as i128 * c(il - s[j] as i64, l - j);
        }
        prefix[l] = v as u64;
    }
    prefix[k]
}
