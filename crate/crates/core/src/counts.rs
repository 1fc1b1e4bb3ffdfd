//! Shift sizes and the tri-partition of all k-sets into decided and undecided classes.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::binom::BinomialTable;
use crate::error::{Error, Result};
use crate::poset::KSet;
use crate::universe::{left_count_with, Universe};

/// `L_k(S)`: the number of k-subsets of `[n]` lying left of `S` (including `S`).
pub fn left_count(s: &KSet, n: usize) -> u64 {
    let binom = BinomialTable::new(n, s.k()).expect("binomials overflow u64");
    let mut prefix = vec![0u64; s.k() + 1];
    left_count_with(&binom, s.elements(), &mut prefix)
}

/// `R_k(S)`: the number of k-subsets of `[n]` lying right of `S` (including `S`).
pub fn right_count(s: &KSet, n: usize) -> u64 {
    left_count(&s.reflect(n), n)
}

/// Label of a k-set in a [`FamilyState`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Undecided,
    /// In the left closure of the nonnegative family.
    Pos,
    /// In the right closure of the negative family.
    Neg,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Undecided => "UNDECIDED",
            Label::Pos => "POS",
            Label::Neg => "NEG",
        }
    }
}

/// How the restricted counts `L*`, `R*` are computed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Breadth-first search over the cover digraph for small `k`, inclusion-exclusion otherwise.
    #[default]
    Auto,
    Bfs,
    #[serde(rename = "incexc")]
    IncExc,
}

impl Strategy {
    /// Picks a concrete strategy; `Bfs` falls back to `IncExc` when the cover
    /// digraph would exceed its memory budget.
    pub fn resolve(self, universe: &Universe) -> Strategy {
        let wanted = match self {
            Strategy::Auto if universe.k() <= 4 => Strategy::Bfs,
            Strategy::Auto => Strategy::IncExc,
            s => s,
        };
        if wanted == Strategy::Bfs && universe.hasse().is_none() {
            Strategy::IncExc
        } else {
            wanted
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Strategy::Auto),
            "bfs" => Ok(Strategy::Bfs),
            "incexc" => Ok(Strategy::IncExc),
            _ => Err(Error::InvalidParameters(format!("unknown strategy {s:?}"))),
        }
    }
}

/// A set that would have to be both nonnegative and negative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("k-set with colex rank {0} is already decided with the opposite sign")]
pub struct Conflict(pub u32);

/// Labels of all k-sets together with the generating families and cached counts.
///
/// `POS` is the left closure of `A⁺`, `NEG` the right closure of `A⁻`, and the
/// rest is undecided. `lstar[S] = |L(S) \ L(A⁺)|` and `rstar[S] = |R(S) \ R(A⁻)|`
/// while the respective cache is valid; `POS` sets hold `lstar = 0` and `NEG`
/// sets `rstar = 0`.
#[derive(Clone, Debug)]
pub struct FamilyState {
    universe: Arc<Universe>,
    strategy: Strategy,
    labels: Vec<Label>,
    aplus: Vec<u32>,
    aminus: Vec<u32>,
    pos: usize,
    neg: usize,
    lstar: Vec<u64>,
    lstar_valid: bool,
    rstar: Vec<u64>,
    rstar_valid: bool,
}

impl FamilyState {
    /// All sets undecided; the strategy is resolved against the universe.
    pub fn new(universe: Arc<Universe>, strategy: Strategy) -> Self {
        let strategy = strategy.resolve(&universe);
        let size = universe.size();
        let lstar = (0..size as u32).map(|r| universe.left_count(r)).collect();
        let rstar = (0..size as u32).map(|r| universe.right_count(r)).collect();
        Self {
            universe,
            strategy,
            labels: vec![Label::Undecided; size],
            aplus: Vec::new(),
            aminus: Vec::new(),
            pos: 0,
            neg: 0,
            lstar,
            lstar_valid: true,
            rstar,
            rstar_valid: true,
        }
    }

    /// Builds the state generated by the given families.
    pub fn from_generators(
        universe: Arc<Universe>,
        strategy: Strategy,
        aplus: &[u32],
        aminus: &[u32],
    ) -> Result<Self, Conflict> {
        let mut st = Self::new(universe, strategy);
        for &r in aplus {
            st.mark_positive(r)?;
        }
        for &r in aminus {
            st.mark_negative(r)?;
        }
        Ok(st)
    }

    pub fn universe(&self) -> &Arc<Universe> {
        &self.universe
    }

    pub fn n(&self) -> usize {
        self.universe.n()
    }

    pub fn k(&self) -> usize {
        self.universe.k()
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    #[inline]
    pub fn label(&self, r: u32) -> Label {
        self.labels[r as usize]
    }

    #[inline]
    pub fn is_undecided(&self, r: u32) -> bool {
        self.labels[r as usize] == Label::Undecided
    }

    /// `|L(A⁺)|`.
    pub fn pos_count(&self) -> usize {
        self.pos
    }

    /// `|R(A⁻)|`.
    pub fn neg_count(&self) -> usize {
        self.neg
    }

    pub fn undecided_count(&self) -> usize {
        self.labels.len() - self.pos - self.neg
    }

    /// Generators of the nonnegative family, as colex ranks in insertion order.
    pub fn aplus(&self) -> &[u32] {
        &self.aplus
    }

    /// Generators of the negative family, as colex ranks in insertion order.
    pub fn aminus(&self) -> &[u32] {
        &self.aminus
    }

    pub fn undecided(&self) -> impl Iterator<Item = u32> + '_ {
        (0..self.labels.len() as u32).filter(|&r| self.is_undecided(r))
    }

    /// Labels all of `R(S)` negative and records `S` as a generator.
    ///
    /// Returns the number of newly labeled sets; already-negative sets are skipped.
    pub fn mark_negative(&mut self, r: u32) -> Result<usize, Conflict> {
        match self.label(r) {
            Label::Pos => return Err(Conflict(r)),
            Label::Neg => return Ok(0),
            Label::Undecided => {}
        }
        let mut queue = VecDeque::from([r]);
        let mut added = Vec::new();
        self.labels[r as usize] = Label::Neg;
        while let Some(s) = queue.pop_front() {
            added.push(s);
            let mut conflict = None;
            self.universe.for_each_right_cover(s, |_, t| match self.labels[t as usize] {
                Label::Undecided => {
                    self.labels[t as usize] = Label::Neg;
                    queue.push_back(t);
                }
                Label::Pos => conflict = Some(t),
                Label::Neg => {}
            });
            if let Some(t) = conflict {
                // a POS set right of an undecided one breaks left closure
                for a in added.into_iter().chain(queue) {
                    self.labels[a as usize] = Label::Undecided;
                }
                return Err(Conflict(t));
            }
        }
        self.neg += added.len();
        self.aminus.push(r);
        self.rstar_valid = false;
        for a in added.iter() {
            self.rstar[*a as usize] = 0;
        }
        Ok(added.len())
    }

    /// Labels all of `L(S)` positive and records `S` as a generator.
    ///
    /// Invalidates the `L*` cache; see [`apply_positive`](Self::apply_positive)
    /// for the incremental variant.
    pub fn mark_positive(&mut self, r: u32) -> Result<usize, Conflict> {
        let added = self.label_positive(r)?;
        if added > 0 {
            self.lstar_valid = false;
        }
        Ok(added)
    }

    /// Adds an undecided `S` to `A⁺` and updates the `L*` cache in place by
    /// `L*(T) -= L*(T ∨ S)`.
    pub fn apply_positive(&mut self, r: u32) -> Result<usize> {
        if !self.is_undecided(r) {
            return Err(Error::InvalidParameters(format!(
                "{} is already decided",
                self.universe.kset(r)
            )));
        }
        self.ensure_lstar();
        for t in (0..self.labels.len() as u32).rev() {
            if self.labels[t as usize] != Label::Pos {
                let j = self.universe.join_ranks(t, r);
                self.lstar[t as usize] -= self.lstar[j as usize];
            }
        }
        let added = self.label_positive(r).map_err(|c| Error::Conflict(self.universe.kset(c.0).to_string()))?;
        debug_assert!(self.labels.iter().zip(&self.lstar).all(|(l, &v)| *l != Label::Pos || v == 0));
        Ok(added)
    }

    fn label_positive(&mut self, r: u32) -> Result<usize, Conflict> {
        match self.label(r) {
            Label::Neg => return Err(Conflict(r)),
            Label::Pos => return Ok(0),
            Label::Undecided => {}
        }
        let mut queue = VecDeque::from([r]);
        let mut added = Vec::new();
        self.labels[r as usize] = Label::Pos;
        while let Some(s) = queue.pop_front() {
            added.push(s);
            let mut conflict = None;
            self.universe.for_each_left_cover(s, |_, t| match self.labels[t as usize] {
                Label::Undecided => {
                    self.labels[t as usize] = Label::Pos;
                    queue.push_back(t);
                }
                Label::Neg => conflict = Some(t),
                Label::Pos => {}
            });
            if let Some(t) = conflict {
                for a in added.into_iter().chain(queue) {
                    self.labels[a as usize] = Label::Undecided;
                }
                return Err(Conflict(t));
            }
        }
        self.pos += added.len();
        self.aplus.push(r);
        for a in added.iter() {
            self.lstar[*a as usize] = 0;
        }
        Ok(added.len())
    }

    /// `L*` of `r`, recomputing the cache if needed.
    pub fn lstar(&mut self, r: u32) -> u64 {
        self.ensure_lstar();
        self.lstar[r as usize]
    }

    /// `R*` of `r`, recomputing the cache if needed.
    pub fn rstar(&mut self, r: u32) -> u64 {
        self.ensure_rstar();
        self.rstar[r as usize]
    }

    /// Cached `L*` array; valid after [`ensure_lstar`](Self::ensure_lstar).
    pub fn lstar_values(&self) -> Option<&[u64]> {
        self.lstar_valid.then_some(&self.lstar[..])
    }

    /// Cached `R*` array; valid after [`ensure_rstar`](Self::ensure_rstar).
    pub fn rstar_values(&self) -> Option<&[u64]> {
        self.rstar_valid.then_some(&self.rstar[..])
    }

    pub fn ensure_lstar(&mut self) {
        if !self.lstar_valid {
            self.lstar = match self.strategy {
                Strategy::Bfs => self.all_lstar_bfs(),
                _ => self.lstar_incexc(),
            };
            self.lstar_valid = true;
        }
    }

    pub fn ensure_rstar(&mut self) {
        if !self.rstar_valid {
            self.rstar = match self.strategy {
                Strategy::Bfs => self.all_rstar_bfs(),
                _ => self.rstar_incexc(),
            };
            self.rstar_valid = true;
        }
    }

    fn all_lstar_bfs(&self) -> Vec<u64> {
        let mut bfs = Bfs::new(self.labels.len());
        (0..self.labels.len() as u32)
            .map(|r| match self.label(r) {
                Label::Pos => 0,
                _ => bfs.count(self, r, Direction::Left),
            })
            .collect()
    }

    fn all_rstar_bfs(&self) -> Vec<u64> {
        let mut bfs = Bfs::new(self.labels.len());
        (0..self.labels.len() as u32)
            .map(|r| match self.label(r) {
                Label::Neg => 0,
                _ => bfs.count(self, r, Direction::Right),
            })
            .collect()
    }

    /// `|L(S) \ L(A⁺)|` by breadth-first search, counting sets not labeled `POS`.
    pub fn lstar_bfs(&self, r: u32) -> u64 {
        Bfs::new(self.labels.len()).count(self, r, Direction::Left)
    }

    /// `|R(S) \ R(A⁻)|` by breadth-first search, counting sets not labeled `NEG`.
    pub fn rstar_bfs(&self, r: u32) -> u64 {
        Bfs::new(self.labels.len()).count(self, r, Direction::Right)
    }

    /// `L*` for every set by inclusion-exclusion over left covers, in increasing colex order.
    pub fn lstar_incexc(&self) -> Vec<u64> {
        let u = &*self.universe;
        let mut out = vec![0u64; self.labels.len()];
        let mut pos = Vec::with_capacity(u.k());
        for r in 0..self.labels.len() as u32 {
            if self.label(r) == Label::Pos {
                continue;
            }
            pos.clear();
            u.for_each_left_cover(r, |p, _| pos.push(p));
            out[r as usize] = inclusion_exclusion(&pos, |mask| out[u.join_of_left_covers(r, mask) as usize]);
        }
        out
    }

    /// `R*` for every set by inclusion-exclusion over right covers, in decreasing colex order.
    pub fn rstar_incexc(&self) -> Vec<u64> {
        let u = &*self.universe;
        let mut out = vec![0u64; self.labels.len()];
        let mut pos = Vec::with_capacity(u.k());
        for r in (0..self.labels.len() as u32).rev() {
            if self.label(r) == Label::Neg {
                continue;
            }
            pos.clear();
            u.for_each_right_cover(r, |p, _| pos.push(p));
            out[r as usize] = inclusion_exclusion(&pos, |mask| out[u.meet_of_right_covers(r, mask) as usize]);
        }
        out
    }

    /// Checks the closure invariants and label counts against a fresh rebuild.
    pub fn audit(&self) -> Result<(), String> {
        let u = &*self.universe;
        let (mut pos, mut neg) = (0, 0);
        for r in 0..self.labels.len() as u32 {
            match self.label(r) {
                Label::Pos => {
                    pos += 1;
                    let mut bad = false;
                    u.for_each_left_cover(r, |_, t| bad |= self.label(t) != Label::Pos);
                    if bad {
                        return Err(format!("POS class not left-closed at {}", u.kset(r)));
                    }
                }
                Label::Neg => {
                    neg += 1;
                    let mut bad = false;
                    u.for_each_right_cover(r, |_, t| bad |= self.label(t) != Label::Neg);
                    if bad {
                        return Err(format!("NEG class not right-closed at {}", u.kset(r)));
                    }
                }
                Label::Undecided => {}
            }
        }
        if pos != self.pos || neg != self.neg {
            return Err(format!("label counts {pos}/{neg} differ from stored {}/{}", self.pos, self.neg));
        }
        let fresh = FamilyState::from_generators(self.universe.clone(), self.strategy, &self.aplus, &self.aminus)
            .map_err(|c| format!("generators conflict at {}", u.kset(c.0)))?;
        if fresh.labels != self.labels {
            return Err("labels differ from the closure of the generators".into());
        }
        Ok(())
    }

    /// One line per set: `<colex-rank> <POS|NEG|UNDECIDED> <kset>`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in 0..self.labels.len() as u32 {
            let _ = writeln!(out, "{} {} {}", r, self.label(r).as_str(), self.universe.kset(r));
        }
        out
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Direction {
    Left,
    Right,
}

/// Reusable BFS buffers with generation stamps.
struct Bfs {
    stamp: Vec<u32>,
    gen: u32,
    queue: Vec<u32>,
}

impl Bfs {
    fn new(size: usize) -> Self {
        Self { stamp: vec![0; size], gen: 0, queue: Vec::new() }
    }

    fn count(&mut self, st: &FamilyState, r: u32, dir: Direction) -> u64 {
        let (skip, forbidden) = match dir {
            Direction::Left => (Label::Pos, Label::Neg),
            Direction::Right => (Label::Neg, Label::Pos),
        };
        if st.label(r) == skip {
            return 0;
        }
        let undecided_root = st.is_undecided(r);
        self.gen += 1;
        let gen = self.gen;
        self.queue.clear();
        self.queue.push(r);
        self.stamp[r as usize] = gen;
        let hasse = st.universe.hasse();
        let mut head = 0;
        while head < self.queue.len() {
            let s = self.queue[head];
            head += 1;
            // no left shift of an undecided set is NEG (and dually)
            assert!(
                !undecided_root || st.label(s) != forbidden,
                "closure invariant violated below an undecided set"
            );
            let mut visit = |t: u32| {
                if self.stamp[t as usize] != gen && st.label(t) != skip {
                    self.stamp[t as usize] = gen;
                    self.queue.push(t);
                }
            };
            match (hasse, dir) {
                (Some(h), Direction::Left) => h.left(s).iter().for_each(|&t| visit(t)),
                (Some(h), Direction::Right) => h.right(s).iter().for_each(|&t| visit(t)),
                (None, Direction::Left) => st.universe.for_each_left_cover(s, |_, t| visit(t)),
                (None, Direction::Right) => st.universe.for_each_right_cover(s, |_, t| visit(t)),
            }
        }
        self.queue.len() as u64
    }
}

/// `1 + Σ_{∅≠A⊆covers} (-1)^{|A|+1} value(∨A)`, with `value` indexed by position mask.
fn inclusion_exclusion(positions: &[usize], value: impl Fn(u32) -> u64) -> u64 {
    let m = positions.len();
    let mut total: i128 = 1;
    let mut terms = 0u32;
    for sub in 1u32..(1 << m) {
        let mut mask = 0u32;
        for (i, &p) in positions.iter().enumerate() {
            if sub >> i & 1 == 1 {
                mask |= 1 << p;
            }
        }
        let v = value(mask) as i128;
        if sub.count_ones() % 2 == 1 {
            total += v;
        } else {
            total -= v;
        }
        terms += 1;
    }
    debug_assert!(terms < 1 << m.max(1));
    total as u64
}
