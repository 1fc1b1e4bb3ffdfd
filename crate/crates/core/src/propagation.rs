//! Forced-sign deductions: counting rules, LP probes and their fixed points.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::{Duration, Instant};

use num_rational::BigRational;
use num_traits::Signed;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::binom::binomial;
use crate::counts::{left_count, FamilyState};
use crate::error::{Error, Result};
use crate::exact;
use crate::lp::{build_lp_ranks, solve, LpResult};
use crate::poset::KSet;
use crate::prooflog::{Dir, Event, Rule};
use crate::universe::Universe;

/// Propagation engine used at every search node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Counting rules only.
    #[default]
    Negative,
    /// Counting rules plus exhaustive LP probes in reverse lex order.
    Positive,
    /// Counting rules plus randomly sampled LP probes.
    Stochastic,
}

impl Mode {
    pub fn token(self) -> &'static str {
        match self {
            Mode::Negative => "negative",
            Mode::Positive => "positive",
            Mode::Stochastic => "stochastic",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "negative" => Ok(Mode::Negative),
            "positive" => Ok(Mode::Positive),
            "stochastic" => Ok(Mode::Stochastic),
            _ => Err(format!("unknown mode {s:?}")),
        }
    }
}

/// Where a table entry came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    Computed,
    Baranyai,
    Absent,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GEntry {
    pub n: usize,
    pub k: usize,
    #[serde(with = "exact::dec")]
    pub g: u64,
    pub provenance: Provenance,
}

/// Known values of `g(n, k)`.
///
/// When `k` divides `n` the value `C(n-1, k-1)` is available implicitly.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GTable {
    entries: BTreeMap<(usize, usize), (u64, Provenance)>,
}

impl GTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records a value; rejects entries that break monotonicity in `n`.
    pub fn insert(&mut self, n: usize, k: usize, g: u64, provenance: Provenance) -> Result<()> {
        if provenance == Provenance::Baranyai && (!n.is_multiple_of(k) || Some(g) != binomial(n as u64 - 1, k as u64 - 1)) {
            return Err(Error::InvalidParameters(format!("({n},{k}) -> {g} is not a divisible-case value")));
        }
        for (&(m, kk), &(v, _)) in &self.entries {
            if kk == k && ((m < n && v > g) || (m > n && v < g)) {
                return Err(Error::InvalidParameters(format!(
                    "g({n},{k}) = {g} is not monotone against g({m},{k}) = {v}"
                )));
            }
        }
        self.entries.insert((n, k), (g, provenance));
        Ok(())
    }

    /// Exact entry, falling back to the divisible-case value.
    pub fn get(&self, n: usize, k: usize) -> (u64, Provenance) {
        if let Some(&e) = self.entries.get(&(n, k)) {
            return e;
        }
        if k >= 1 && n >= k && n.is_multiple_of(k) {
            return (binomial(n as u64 - 1, k as u64 - 1).expect("binomial overflow"), Provenance::Baranyai);
        }
        (0, Provenance::Absent)
    }

    /// Largest known `g(m', k)` with `k <= m' <= m`; a lower bound on `g(m, k)`.
    pub fn lower_bound(&self, m: usize, k: usize) -> u64 {
        if k == 0 || m < k {
            return 0;
        }
        let stored = self.entries.range((k, k)..=(m, k)).filter(|(key, _)| key.1 == k).map(|(_, v)| v.0).max().unwrap_or(0);
        let divisible = (m / k) * k;
        stored.max(self.get(divisible, k).0)
    }

    pub fn entries(&self) -> Vec<GEntry> {
        self.entries.iter().map(|(&(n, k), &(g, provenance))| GEntry { n, k, g, provenance }).collect()
    }

    pub fn from_entries(entries: &[GEntry]) -> Result<Self> {
        let mut t = Self::new();
        for e in entries {
            t.insert(e.n, e.k, e.g, e.provenance)?;
        }
        Ok(t)
    }
}

impl Serialize for GTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries().serialize(s)
    }
}

impl<'de> Deserialize<'de> for GTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<GEntry>::deserialize(d)?;
        GTable::from_entries(&v).map_err(serde::de::Error::custom)
    }
}

/// Knobs for randomized propagation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagationConfig {
    /// Consecutive failed probes before giving up.
    pub sample_limit: u32,
    /// Wall-clock budget per call.
    pub time_limit: Duration,
    #[serde(with = "exact::dec")]
    pub rng_seed: u64,
    /// Minimum `|B⁺| + |B⁻|` before random probing starts.
    pub enable_after_branch_depth: usize,
}

impl Default for PropagationConfig {
    fn default() -> Self {
        Self { sample_limit: 200, time_limit: Duration::from_secs(60), rng_seed: 0, enable_after_branch_depth: 4 }
    }
}

/// Per-node generator: ChaCha8 seeded with `seed`, stream chosen by the node path.
pub fn node_rng(seed: u64, path: &str) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = Sha256::digest(path.as_bytes());
    rng.set_stream(u64::from_le_bytes(h[..8].try_into().unwrap()));
    rng
}

/// The tail set `{1, n-k+2, ..., n}`, the sharp nonnegative set.
pub fn tail_set(n: usize, k: usize) -> KSet {
    let mut v = vec![1u8];
    v.extend((n - k + 2) as u8..=n as u8);
    KSet::new(&v).expect("valid tail set")
}

/// The counting rules for a fixed threshold.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NegativeRules {
    pub t: u64,
    /// Bound used by the tail rule; zero disables it.
    pub tail: u64,
}

impl NegativeRules {
    /// The tail rule needs `t <= C(n-1, k-1)` unless the tail set is already fixed negative.
    pub fn new(n: usize, k: usize, t: u64, gtable: &GTable, tail_fixed: bool) -> Self {
        let cap = binomial(n as u64 - 1, k as u64 - 1).unwrap_or(u64::MAX);
        let tail = if (tail_fixed || t <= cap) && n >= k { gtable.lower_bound(n - k, k) } else { 0 };
        Self { t, tail }
    }

    /// First rule forcing `S` negative, given `L_k(S)`, `L*_k(S)` and `|L_k(A⁺)|`.
    pub fn rule(&self, contains_one: bool, left: u64, lstar: u64, pos: u64) -> Option<Rule> {
        if left >= self.t {
            Some(Rule::LeftShift)
        } else if contains_one && self.tail > 0 && left + self.tail >= self.t {
            Some(Rule::TailBound)
        } else if lstar + pos >= self.t {
            Some(Rule::UnionCount)
        } else {
            None
        }
    }
}

/// True iff every vector with fewer than `t` nonnegative k-sums is negative on `S`
/// by the left-shift count or the tail bound.
pub fn forced_negative(s: &KSet, n: usize, k: usize, t: u64, gtable: &GTable) -> bool {
    let rules = NegativeRules::new(n, k, t, gtable, false);
    let left = left_count(s, n);
    matches!(rules.rule(s.contains(1), left, 0, 0), Some(Rule::LeftShift | Rule::TailBound))
}

/// Marks negative, in lex order, every undecided set forced by a counting rule.
///
/// Returns the ranks added to `A⁻` in visit order.
pub fn propagate_negative(
    state: &mut FamilyState,
    rules: &NegativeRules,
    round: u32,
    events: &mut Vec<Event>,
) -> Vec<u32> {
    state.ensure_lstar();
    let u = state.universe().clone();
    let pos = state.pos_count() as u64;
    let mut added = Vec::new();
    for &r in u.lex_order() {
        if !state.is_undecided(r) {
            continue;
        }
        let lstar = state.lstar(r);
        if let Some(rule) = rules.rule(u.elements(r)[0] == 1, u.left_count(r), lstar, pos) {
            state.mark_negative(r).expect("undecided sets cannot conflict");
            events.push(Event::Round { round, dir: Dir::Neg, set: u.kset(r), rule, cert: None });
            added.push(r);
        }
    }
    added
}

/// How a propagation call ended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PropOutcome {
    /// At least `t` sets are forced nonnegative.
    Threshold,
    /// The program of the current families is infeasible.
    Infeasible(LpResult),
    /// Nothing more could be deduced.
    Stable,
}

/// Running counters for LP use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LpStats {
    pub solves: u64,
    pub skipped: u64,
}

fn sigma(x: &[BigRational], elems: &[u8]) -> BigRational {
    elems.iter().map(|&e| &x[e as usize - 1]).sum()
}

fn solve_ranks(u: &Universe, aplus: &[u32], aminus: &[u32], stats: &mut LpStats) -> Result<LpResult> {
    stats.solves += 1;
    solve(&build_lp_ranks(u, aplus, aminus))
}

fn lp_event(res: &LpResult) -> Event {
    Event::Lp { verdict: res.verdict, objective: res.objective.clone(), cert: res.certificate_digest() }
}

/// Alternates counting rules with full reverse-lex passes of LP probes.
///
/// Each pass probes `P(A⁺, A⁻ ∪ {S})` for every undecided `S` against the
/// current `A⁺`; sets with an infeasible probe join `A⁺` at once. Counting
/// rules run once before the first pass and once after every pass that
/// changed something, and the base program is checked after each of them.
/// Round numbers start at `first_round`; the last one used is returned.
pub fn propagate_positive(
    state: &mut FamilyState,
    rules: &NegativeRules,
    first_round: u32,
    events: &mut Vec<Event>,
    stats: &mut LpStats,
) -> Result<(PropOutcome, u32)> {
    let u = state.universe().clone();
    let mut round = first_round;
    propagate_negative(state, rules, round, events);
    loop {
        if state.pos_count() as u64 >= rules.t {
            return Ok((PropOutcome::Threshold, round));
        }
        let base = solve_ranks(&u, state.aplus(), state.aminus(), stats)?;
        if !base.is_feasible() {
            events.push(lp_event(&base));
            return Ok((PropOutcome::Infeasible(base), round));
        }
        let x = base.x.as_ref().unwrap();
        let mut updated = false;
        for &r in u.lex_order().iter().rev() {
            if !state.is_undecided(r) {
                continue;
            }
            if sigma(x, u.elements(r)).is_negative() {
                stats.skipped += 1;
                continue;
            }
            let mut aminus = state.aminus().to_vec();
            aminus.push(r);
            let probe = solve_ranks(&u, state.aplus(), &aminus, stats)?;
            if !probe.is_feasible() {
                state.mark_positive(r).expect("undecided sets cannot conflict");
                events.push(Event::Round {
                    round,
                    dir: Dir::Pos,
                    set: u.kset(r),
                    rule: Rule::LpNegProbe,
                    cert: probe.certificate_digest(),
                });
                updated = true;
                if state.pos_count() as u64 >= rules.t {
                    events.push(Event::Count { pos: state.pos_count() as u64 });
                    return Ok((PropOutcome::Threshold, round));
                }
            }
        }
        if !updated {
            return Ok((PropOutcome::Stable, round));
        }
        events.push(Event::Count { pos: state.pos_count() as u64 });
        round += 1;
        propagate_negative(state, rules, round, events);
    }
}

/// Counting rules alternated with uniformly sampled LP probes in both directions.
///
/// Stops after `sample_limit` consecutive unsuccessful samples, when the time
/// limit expires, when no undecided set remains or when the threshold is met.
#[allow(clippy::too_many_arguments)]
pub fn stochastic_propagation(
    state: &mut FamilyState,
    rules: &NegativeRules,
    config: &PropagationConfig,
    rng: &mut ChaCha8Rng,
    first_round: u32,
    events: &mut Vec<Event>,
    stats: &mut LpStats,
) -> Result<(PropOutcome, u32)> {
    let u = state.universe().clone();
    let start = Instant::now();
    let mut round = first_round;
    loop {
        propagate_negative(state, rules, round, events);
        if state.pos_count() as u64 >= rules.t {
            return Ok((PropOutcome::Threshold, round));
        }
        let base = solve_ranks(&u, state.aplus(), state.aminus(), stats)?;
        if !base.is_feasible() {
            events.push(lp_event(&base));
            return Ok((PropOutcome::Infeasible(base), round));
        }
        let x = base.x.as_ref().unwrap();
        let mut failures = 0u32;
        let mut updated = false;
        while !updated {
            if failures >= config.sample_limit || start.elapsed() >= config.time_limit {
                return Ok((PropOutcome::Stable, round));
            }
            let undecided: Vec<u32> = state.undecided().collect();
            if undecided.is_empty() {
                return Ok((PropOutcome::Stable, round));
            }
            let r = undecided[rng.random_range(0..undecided.len())];
            let sig = sigma(x, u.elements(r));
            if !sig.is_negative() {
                let mut aminus = state.aminus().to_vec();
                aminus.push(r);
                let probe = solve_ranks(&u, state.aplus(), &aminus, stats)?;
                if !probe.is_feasible() {
                    state.mark_positive(r).expect("undecided sets cannot conflict");
                    events.push(Event::Round {
                        round,
                        dir: Dir::Pos,
                        set: u.kset(r),
                        rule: Rule::LpNegProbe,
                        cert: probe.certificate_digest(),
                    });
                    if state.pos_count() as u64 >= rules.t {
                        events.push(Event::Count { pos: state.pos_count() as u64 });
                        return Ok((PropOutcome::Threshold, round));
                    }
                    updated = true;
                    continue;
                }
            } else {
                stats.skipped += 1;
            }
            if sig.is_negative() {
                let mut aplus = state.aplus().to_vec();
                aplus.push(r);
                let probe = solve_ranks(&u, &aplus, state.aminus(), stats)?;
                if !probe.is_feasible() {
                    state.mark_negative(r).expect("undecided sets cannot conflict");
                    events.push(Event::Round {
                        round,
                        dir: Dir::Neg,
                        set: u.kset(r),
                        rule: Rule::LpPosProbe,
                        cert: probe.certificate_digest(),
                    });
                    updated = true;
                    continue;
                }
            } else {
                stats.skipped += 1;
            }
            failures += 1;
        }
        round += 1;
    }
}
