//! Independent checker for proof logs.
//!
//! Families are rebuilt from the events alone. Counts are recomputed by walking
//! cover relations, every LP step is solved again and its certificate digest compared.

use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::binom::binomial;
use crate::error::{Error, Result};
use crate::lp::{build_lp_ranks, solve, LpVerdict};
use crate::poset::{Direction, KSet};
use crate::prooflog::{CloseReason, Dir, Event, Outcome, ProofLog};
use crate::propagation::{tail_set, GTable};
use crate::universe::Universe;

/// Summary of a successful replay.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayReport {
    pub result: Outcome,
    pub nodes: u64,
    /// Propagation steps checked.
    pub rounds: u64,
    /// Programs solved again.
    pub lp_solves: u64,
    /// Bound on `g(n-k, k)` the tail rule relied on.
    pub tail: u64,
    pub witness: Option<(u64, Vec<BigRational>)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mark {
    Open,
    Pos,
    Neg,
}

#[derive(Clone)]
struct NodeState {
    marks: Vec<Mark>,
    aplus: Vec<u32>,
    aminus: Vec<u32>,
    pos: u64,
}

struct Walker {
    seen: Vec<u32>,
    stamp: u32,
    queue: Vec<u32>,
}

impl Walker {
    fn new(size: usize) -> Self {
        Self { seen: vec![0; size], stamp: 0, queue: Vec::new() }
    }

    /// Visits every set reachable from `r` by covers in `dir`, including `r`.
    fn walk(&mut self, u: &Universe, r: u32, dir: Direction, mut visit: impl FnMut(u32)) {
        self.stamp += 1;
        self.queue.clear();
        self.queue.push(r);
        self.seen[r as usize] = self.stamp;
        while let Some(a) = self.queue.pop() {
            visit(a);
            let mut next = |_, b: u32| {
                if self.seen[b as usize] != self.stamp {
                    self.seen[b as usize] = self.stamp;
                    self.queue.push(b);
                }
            };
            match dir {
                Direction::Left => u.for_each_left_cover(a, &mut next),
                Direction::Right => u.for_each_right_cover(a, &mut next),
            }
        }
    }
}

struct Replayer<'a> {
    u: Universe,
    log: &'a ProofLog,
    walker: Walker,
    report: ReplayReport,
}

fn fail(idx: usize, msg: impl Into<String>) -> Error {
    // line 1 is the version, line 2 the header
    Error::Replay { line: idx + 3, msg: msg.into() }
}

impl Replayer<'_> {
    fn mark(&mut self, st: &mut NodeState, r: u32, dir: Dir, idx: usize) -> Result<()> {
        if st.marks[r as usize] != Mark::Open {
            return Err(fail(idx, format!("{} is already decided", self.u.kset(r))));
        }
        let (want, other, walk) = match dir {
            Dir::Pos => (Mark::Pos, Mark::Neg, Direction::Left),
            Dir::Neg => (Mark::Neg, Mark::Pos, Direction::Right),
        };
        let mut clash = false;
        let mut added = 0;
        let marks = &mut st.marks;
        self.walker.walk(&self.u, r, walk, |a| match marks[a as usize] {
            m if m == other => clash = true,
            Mark::Open => {
                marks[a as usize] = want;
                added += 1;
            }
            _ => {}
        });
        if clash {
            return Err(fail(idx, format!("{} conflicts with the opposite family", self.u.kset(r))));
        }
        match dir {
            Dir::Pos => {
                st.aplus.push(r);
                st.pos += added;
            }
            Dir::Neg => st.aminus.push(r),
        }
        Ok(())
    }

    fn count_left(&mut self, st: &NodeState, r: u32, skip_pos: bool) -> u64 {
        let mut c = 0;
        self.walker.walk(&self.u, r, Direction::Left, |a| {
            if !(skip_pos && st.marks[a as usize] == Mark::Pos) {
                c += 1;
            }
        });
        c
    }

    fn check_lp(&mut self, aplus: &[u32], aminus: &[u32], idx: usize) -> Result<crate::lp::LpResult> {
        self.report.lp_solves += 1;
        solve(&build_lp_ranks(&self.u, aplus, aminus)).map_err(|e| fail(idx, format!("LP solve failed: {e}")))
    }

    fn probe(&mut self, st: &NodeState, r: u32, dir: Dir, cert: &Option<String>, idx: usize) -> Result<()> {
        let (mut p, mut m) = (st.aplus.clone(), st.aminus.clone());
        match dir {
            Dir::Pos => m.push(r),
            Dir::Neg => p.push(r),
        }
        let res = self.check_lp(&p, &m, idx)?;
        if res.verdict != LpVerdict::Infeasible {
            return Err(fail(idx, format!("probe for {} is feasible", self.u.kset(r))));
        }
        if res.certificate_digest() != *cert {
            return Err(fail(idx, "certificate digest mismatch"));
        }
        Ok(())
    }

    fn count_nonneg(&self, x: &[BigRational]) -> u64 {
        (0..self.u.size() as u32)
            .filter(|&r| !self.u.elements(r).iter().map(|&e| &x[e as usize - 1]).sum::<BigRational>().is_negative())
            .count() as u64
    }

    fn run(&mut self) -> Result<()> {
        let h = &self.log.header;
        let t = h.t;
        let events = &self.log.events;
        // states of expanded nodes, waiting for their children
        let mut parents: HashMap<String, (NodeState, u8)> = HashMap::new();
        let mut opened: HashMap<String, bool> = HashMap::new();
        let mut cur: Option<(String, NodeState)> = None;
        let mut infeasible_here = false;
        let mut witness_here = false;
        let mut node_count = 0u64;
        let fresh = NodeState { marks: vec![Mark::Open; self.u.size()], aplus: Vec::new(), aminus: Vec::new(), pos: 0 };
        let mut i = 0;
        while i < events.len() {
            let ev = &events[i];
            match ev {
                Event::Node { path, depth } => {
                    if cur.is_some() {
                        return Err(fail(i, "node opened before the previous one was closed"));
                    }
                    if *depth as usize != path.len() {
                        return Err(fail(i, "depth does not match path"));
                    }
                    if opened.insert(path.clone(), false).is_some() {
                        return Err(fail(i, format!("node {path:?} opened twice")));
                    }
                    node_count += 1;
                    infeasible_here = false;
                    witness_here = false;
                    let mut st;
                    if path.is_empty() {
                        st = fresh.clone();
                        let mut fixed = Vec::new();
                        while let Some(Event::Fix { set }) = events.get(i + 1) {
                            i += 1;
                            let r = self.rank(set, i)?;
                            self.mark(&mut st, r, Dir::Neg, i)?;
                            fixed.push(set.clone());
                        }
                        let want: Vec<KSet> = if h.strong { vec![tail_set(h.n, h.k)] } else { Vec::new() };
                        if fixed != want {
                            return Err(fail(i, "root fixes do not match the query"));
                        }
                    } else {
                        let (parent, last) = path.split_at(path.len() - 1);
                        let dir = if last == "0" { Dir::Neg } else { Dir::Pos };
                        let entry = parents.get_mut(parent).ok_or_else(|| fail(i, format!("parent of {path:?} was not expanded")))?;
                        st = entry.0.clone();
                        entry.1 += 1;
                        if entry.1 == 2 {
                            parents.remove(parent);
                        }
                        let Some(Event::Branch { set, dir: bdir }) = events.get(i + 1) else {
                            return Err(fail(i + 1, "missing BRANCH"));
                        };
                        i += 1;
                        if *bdir != dir {
                            return Err(fail(i, "branch direction does not match path"));
                        }
                        let r = self.rank(set, i)?;
                        self.mark(&mut st, r, dir, i)?;
                    }
                    cur = Some((path.clone(), st));
                }
                Event::Fix { .. } | Event::Branch { .. } => return Err(fail(i, "misplaced FIX or BRANCH")),
                Event::Round { dir, set, rule, cert, .. } => {
                    let (cpath, mut st) = cur.take().ok_or_else(|| fail(i, "ROUND outside a node"))?;
                    let r = self.rank(set, i)?;
                    if st.marks[r as usize] != Mark::Open {
                        return Err(fail(i, format!("{set} is already decided")));
                    }
                    use crate::prooflog::Rule;
                    let ok = match (dir, rule) {
                        (Dir::Neg, Rule::LeftShift) => self.count_left(&st, r, false) >= t,
                        (Dir::Neg, Rule::TailBound) => {
                            set.contains(1) && self.report.tail > 0 && self.count_left(&st, r, false) + self.report.tail >= t
                        }
                        (Dir::Neg, Rule::UnionCount) => self.count_left(&st, r, true) + st.pos >= t,
                        (Dir::Pos, Rule::LpNegProbe) | (Dir::Neg, Rule::LpPosProbe) => {
                            self.probe(&st, r, *dir, cert, i)?;
                            true
                        }
                        _ => return Err(fail(i, format!("rule {} cannot give direction {dir:?}", rule.token()))),
                    };
                    if !ok {
                        return Err(fail(i, format!("rule {} does not force {set}", rule.token())));
                    }
                    self.mark(&mut st, r, *dir, i)?;
                    self.report.rounds += 1;
                    cur = Some((cpath, st));
                }
                Event::Count { pos } => {
                    let st = &cur.as_ref().ok_or_else(|| fail(i, "COUNT outside a node"))?.1;
                    if st.pos != *pos {
                        return Err(fail(i, format!("count is {}, log says {pos}", st.pos)));
                    }
                }
                Event::Lp { verdict, objective, cert } => {
                    let st = cur.as_ref().ok_or_else(|| fail(i, "LP outside a node"))?.1.clone();
                    let res = self.check_lp(&st.aplus, &st.aminus, i)?;
                    if res.verdict != *verdict || res.objective != *objective || res.certificate_digest() != *cert {
                        return Err(fail(i, "LP result differs"));
                    }
                    infeasible_here = res.verdict == LpVerdict::Infeasible;
                }
                Event::Witness { s, x } => {
                    cur.as_ref().ok_or_else(|| fail(i, "WITNESS outside a node"))?;
                    if x.len() != h.n {
                        return Err(fail(i, "witness has the wrong length"));
                    }
                    if x.iter().sum::<BigRational>().is_negative() || x.windows(2).any(|w| w[0] < w[1]) {
                        return Err(fail(i, "witness is not a sorted vector with nonnegative sum"));
                    }
                    if x.iter().all(Zero::is_zero) {
                        return Err(fail(i, "witness is zero"));
                    }
                    let count = self.count_nonneg(x);
                    if count != *s || count >= t {
                        return Err(fail(i, format!("witness has {count} nonnegative sums")));
                    }
                    if h.strong && !tail_set(h.n, h.k).sum_of(x).is_negative() {
                        return Err(fail(i, "witness is nonnegative on the tail set"));
                    }
                    witness_here = true;
                    self.report.witness = Some((*s, x.clone()));
                }
                Event::Close { path, reason } => {
                    let (cpath, st) = cur.take().ok_or_else(|| fail(i, "CLOSE outside a node"))?;
                    if *path != cpath {
                        return Err(fail(i, "CLOSE does not match the open node"));
                    }
                    let ok = match reason {
                        CloseReason::Threshold => st.pos >= t,
                        CloseReason::Infeasible => infeasible_here,
                        CloseReason::Witness => witness_here,
                        CloseReason::Expanded => {
                            parents.insert(path.clone(), (st, 0));
                            true
                        }
                        CloseReason::Budget => true,
                        CloseReason::Conflict => false,
                    };
                    if !ok {
                        return Err(fail(i, format!("close reason {} is not justified", reason.token())));
                    }
                    opened.insert(path.clone(), true);
                }
            }
            i += 1;
        }
        if cur.is_some() {
            return Err(fail(events.len(), "last node is not closed"));
        }
        let footer = self.log.footer.as_ref().ok_or_else(|| fail(events.len(), "missing RESULT"))?;
        if footer.nodes != node_count {
            return Err(fail(events.len(), format!("RESULT claims {} nodes, log has {node_count}", footer.nodes)));
        }
        match footer.result {
            Outcome::Holds => {
                if t > 0 && !opened.contains_key("") {
                    return Err(fail(events.len(), "root node missing"));
                }
                if let Some(p) = parents.keys().next() {
                    return Err(fail(events.len(), format!("children of {p:?} missing")));
                }
                if self.report.witness.is_some() {
                    return Err(fail(events.len(), "HOLDS log contains a witness"));
                }
            }
            Outcome::Witness => {
                if self.report.witness.is_none() {
                    return Err(fail(events.len(), "WITNESS result without a witness"));
                }
            }
            Outcome::Indeterminate => {}
        }
        self.report.result = footer.result;
        self.report.nodes = node_count;
        Ok(())
    }

    fn rank(&self, s: &KSet, idx: usize) -> Result<u32> {
        self.u.rank(s).map_err(|e| fail(idx, e.to_string()))
    }
}

/// Checks every step of `log`.
///
/// The tail rule is trusted to use the bound in the header. When `gtable` is
/// given, that bound is also checked against it.
pub fn replay(log: &ProofLog, gtable: Option<&GTable>) -> Result<ReplayReport> {
    let h = &log.header;
    let hdr = |msg: String| Error::Replay { line: 2, msg };
    if h.k == 0 || h.n < h.k {
        return Err(hdr(format!("bad parameters n={} k={}", h.n, h.k)));
    }
    if h.tail > 0 {
        let cap = binomial(h.n as u64 - 1, h.k as u64 - 1).unwrap_or(u64::MAX);
        if !h.strong && h.t > cap {
            return Err(hdr("tail rule used above C(n-1, k-1)".into()));
        }
        if let Some(g) = gtable {
            let lb = g.lower_bound(h.n - h.k, h.k);
            if h.tail > lb {
                return Err(hdr(format!("tail bound {} exceeds known g({}, {}) >= {lb}", h.tail, h.n - h.k, h.k)));
            }
        }
    }
    let u = Universe::new(h.n, h.k).map_err(|e| hdr(e.to_string()))?;
    let size = u.size();
    let mut rp = Replayer {
        u,
        log,
        walker: Walker::new(size),
        report: ReplayReport { result: Outcome::Indeterminate, nodes: 0, rounds: 0, lp_solves: 0, tail: h.tail, witness: None },
    };
    rp.run()?;
    Ok(rp.report)
}
