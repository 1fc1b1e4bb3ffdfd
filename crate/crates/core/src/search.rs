//! Branch-and-cut over the undecided k-sets.

use std::sync::atomic::{AtomicBool, Ordering as AtomicOrdering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::counts::{FamilyState, Strategy};
use crate::error::{Error, Result};
use crate::exact;
use crate::lp::{build_lp_ranks, count_nonneg_ksums, hex16, solve, LpVerdict};
use crate::prooflog::{CloseReason, Dir, Event, Footer, Header, Outcome, ProofLog, FORMAT_VERSION};
use crate::propagation::{
    node_rng, propagate_negative, propagate_positive, stochastic_propagation, tail_set, GTable, LpStats, Mode,
    NegativeRules, PropOutcome, PropagationConfig,
};
use crate::universe::Universe;

/// How the branch set is chosen among the undecided sets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BranchRule {
    /// Maximize `min(L*, R*)`, ties to the lowest colex rank.
    #[default]
    MaxMin,
    /// First undecided set in lex order.
    FirstLex,
}

/// Search parameters that do not depend on the query.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub mode: Mode,
    pub strategy: Strategy,
    pub branch_rule: BranchRule,
    pub propagation: PropagationConfig,
    #[serde(default, with = "exact::opt_dec")]
    pub node_budget: Option<u64>,
    #[serde(default)]
    pub time_budget: Option<Duration>,
    /// Worker threads; 1 runs single-threaded with a deterministic log.
    pub parallel: usize,
    /// Closed nodes between checkpoints.
    #[serde(with = "exact::dec")]
    pub checkpoint_nodes: u64,
    pub checkpoint_interval: Duration,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Negative,
            strategy: Strategy::Auto,
            branch_rule: BranchRule::MaxMin,
            propagation: PropagationConfig::default(),
            node_budget: None,
            time_budget: None,
            parallel: 1,
            checkpoint_nodes: 10_000,
            checkpoint_interval: Duration::from_secs(60),
        }
    }
}

impl SearchConfig {
    pub fn with_mode(mode: Mode) -> Self {
        Self { mode, ..Self::default() }
    }

    /// Digest of the settings that influence the log.
    pub fn digest(&self) -> String {
        let text = format!(
            "{}|{:?}|{:?}|{}|{}|{}|{}",
            self.mode.token(),
            self.strategy,
            self.branch_rule,
            self.propagation.sample_limit,
            self.propagation.time_limit.as_millis(),
            self.propagation.rng_seed,
            self.propagation.enable_after_branch_depth
        );
        hex16(&Sha256::digest(text.as_bytes()))
    }
}

/// `(n, k, t)` plus whether the tail set is fixed negative at the root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Query {
    pub n: usize,
    pub k: usize,
    #[serde(with = "exact::dec")]
    pub t: u64,
    pub strong: bool,
}

/// A vector in `F_n` with fewer than `t` nonnegative k-sums.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(with = "exact::rational_vec")]
    pub x: Vec<BigRational>,
    #[serde(with = "exact::dec")]
    pub s: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Witness(Witness),
    Indeterminate,
}

impl Verdict {
    pub fn outcome(&self) -> Outcome {
        match self {
            Verdict::Holds => Outcome::Holds,
            Verdict::Witness(_) => Outcome::Witness,
            Verdict::Indeterminate => Outcome::Indeterminate,
        }
    }
}

/// An open node, stored by its generators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingNode {
    pub path: String,
    pub depth: u32,
    #[serde(with = "exact::dec_vec")]
    pub aplus: Vec<u32>,
    #[serde(with = "exact::dec_vec")]
    pub aminus: Vec<u32>,
    #[serde(with = "exact::dec_vec")]
    pub bplus: Vec<u32>,
    #[serde(with = "exact::dec_vec")]
    pub bminus: Vec<u32>,
    /// Branch set of the node and its sign, absent at the root.
    pub branch: Option<(u32, Dir)>,
}

/// Snapshot handed to checkpoint sinks.
#[derive(Clone, Debug)]
pub struct Snapshot<'a> {
    pub frontier: Vec<PendingNode>,
    pub nodes: u64,
    pub log: &'a ProofLog,
}

pub type CheckpointSink<'a> = dyn FnMut(&Snapshot<'_>) -> Result<()> + 'a;

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub verdict: Verdict,
    pub nodes: u64,
    pub log: ProofLog,
    /// Open nodes left when a budget ran out.
    pub frontier: Vec<PendingNode>,
    pub lp: LpStats,
    pub elapsed: Duration,
}

#[derive(Clone)]
struct Frame {
    path: String,
    depth: u32,
    state: FamilyState,
    bplus: Vec<u32>,
    bminus: Vec<u32>,
    branch: Option<(u32, Dir)>,
}

impl Frame {
    fn pending(&self) -> PendingNode {
        PendingNode {
            path: self.path.clone(),
            depth: self.depth,
            aplus: self.state.aplus().to_vec(),
            aminus: self.state.aminus().to_vec(),
            bplus: self.bplus.clone(),
            bminus: self.bminus.clone(),
            branch: self.branch,
        }
    }
}

/// Undecided set maximizing `min(L*, R*)`, ties to the lowest colex rank.
pub fn select_branch_set(state: &mut FamilyState, rule: BranchRule) -> Result<u32> {
    if state.undecided_count() == 0 {
        return Err(Error::InvalidParameters("no undecided set to branch on".into()));
    }
    if rule == BranchRule::FirstLex {
        let u = state.universe().clone();
        return Ok(*u.lex_order().iter().find(|&&r| state.is_undecided(r)).unwrap());
    }
    state.ensure_lstar();
    state.ensure_rstar();
    let (l, r) = (state.lstar_values().unwrap(), state.rstar_values().unwrap());
    let mut best: Option<(u64, u32)> = None;
    for s in state.undecided() {
        let score = l[s as usize].min(r[s as usize]);
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, s));
        }
    }
    Ok(best.unwrap().1)
}

enum NodeResult {
    Closed,
    Expanded(Box<Frame>, Box<Frame>),
    Found(Witness),
}

struct Engine<'a> {
    u: Arc<Universe>,
    query: Query,
    rules: NegativeRules,
    config: &'a SearchConfig,
    lp: LpStats,
}

impl Engine<'_> {
    fn process(&mut self, mut f: Frame, events: &mut Vec<Event>) -> Result<NodeResult> {
        let t = self.query.t;
        events.push(Event::Node { path: f.path.clone(), depth: f.depth });
        match f.branch {
            Some((s, dir)) => events.push(Event::Branch { set: self.u.kset(s), dir }),
            None => {
                for &s in &f.bminus {
                    events.push(Event::Fix { set: self.u.kset(s) });
                }
            }
        }
        #[cfg(debug_assertions)]
        if let Err(e) = f.state.audit() {
            return Err(Error::InvalidParameters(format!("node {} failed audit: {e}", f.path)));
        }
        let close = |events: &mut Vec<Event>, reason| {
            events.push(Event::Close { path: f.path.clone(), reason });
            Ok(NodeResult::Closed)
        };
        if f.state.pos_count() as u64 >= t {
            events.push(Event::Count { pos: f.state.pos_count() as u64 });
            return close(events, CloseReason::Threshold);
        }
        let branched = f.bplus.len() + f.bminus.len();
        let outcome = match self.config.mode {
            Mode::Positive => propagate_positive(&mut f.state, &self.rules, 1, events, &mut self.lp)?.0,
            Mode::Stochastic if branched >= self.config.propagation.enable_after_branch_depth => {
                let mut rng = node_rng(self.config.propagation.rng_seed, &f.path);
                stochastic_propagation(&mut f.state, &self.rules, &self.config.propagation, &mut rng, 1, events, &mut self.lp)?.0
            }
            _ => {
                propagate_negative(&mut f.state, &self.rules, 1, events);
                PropOutcome::Stable
            }
        };
        match outcome {
            PropOutcome::Threshold => return close(events, CloseReason::Threshold),
            PropOutcome::Infeasible(_) => return close(events, CloseReason::Infeasible),
            PropOutcome::Stable => {}
        }
        self.lp.solves += 1;
        let res = solve(&build_lp_ranks(&self.u, f.state.aplus(), f.state.aminus()))?;
        events.push(Event::Lp { verdict: res.verdict, objective: res.objective.clone(), cert: res.certificate_digest() });
        if res.verdict == LpVerdict::Infeasible {
            return close(events, CloseReason::Infeasible);
        }
        let x = res.x.unwrap();
        let s = count_nonneg_ksums(&x, self.query.k);
        if s < t {
            events.push(Event::Witness { s, x: x.clone() });
            events.push(Event::Close { path: f.path.clone(), reason: CloseReason::Witness });
            return Ok(NodeResult::Found(Witness { x, s }));
        }
        if f.state.undecided_count() == 0 {
            return Err(Error::LpFault(format!(
                "decided node with {} nonnegative sets below t has an LP optimum with {s} nonnegative sums",
                f.state.pos_count()
            )));
        }
        let b = select_branch_set(&mut f.state, self.config.branch_rule)?;
        events.push(Event::Close { path: f.path.clone(), reason: CloseReason::Expanded });
        let mut neg = Frame {
            path: format!("{}0", f.path),
            depth: f.depth + 1,
            state: f.state.clone(),
            bplus: f.bplus.clone(),
            bminus: f.bminus.clone(),
            branch: Some((b, Dir::Neg)),
        };
        neg.state.mark_negative(b).map_err(|_| Error::Conflict(self.u.kset(b).to_string()))?;
        neg.bminus.push(b);
        let mut pos = Frame {
            path: format!("{}1", f.path),
            depth: f.depth + 1,
            state: f.state,
            bplus: f.bplus,
            bminus: f.bminus,
            branch: Some((b, Dir::Pos)),
        };
        pos.state.apply_positive(b)?;
        pos.bplus.push(b);
        Ok(NodeResult::Expanded(Box::new(neg), Box::new(pos)))
    }
}

fn frame_from_pending(u: &Arc<Universe>, strategy: Strategy, p: &PendingNode) -> Result<Frame> {
    let state = FamilyState::from_generators(u.clone(), strategy, &p.aplus, &p.aminus)
        .map_err(|c| Error::Conflict(u.kset(c.0).to_string()))?;
    Ok(Frame {
        path: p.path.clone(),
        depth: p.depth,
        state,
        bplus: p.bplus.clone(),
        bminus: p.bminus.clone(),
        branch: p.branch,
    })
}

/// Root node for a query: empty families, or the tail set fixed negative.
pub fn root_node(u: &Universe, query: &Query) -> Result<PendingNode> {
    let mut bminus = Vec::new();
    if query.strong {
        bminus.push(u.rank(&tail_set(query.n, query.k))?);
    }
    Ok(PendingNode {
        path: String::new(),
        depth: 0,
        aplus: Vec::new(),
        aminus: bminus.clone(),
        bplus: Vec::new(),
        bminus,
        branch: None,
    })
}

pub fn header_for(query: &Query, config: &SearchConfig, rules: &NegativeRules) -> Header {
    Header {
        version: FORMAT_VERSION,
        n: query.n,
        k: query.k,
        t: query.t,
        mode: config.mode,
        strong: query.strong,
        seed: config.propagation.rng_seed,
        tail: rules.tail,
        config: config.digest(),
    }
}

/// Decides whether every vector of `F_n` (with `σ_T < 0` in strong mode) has at least `t` nonnegative k-sums.
pub fn verify_g(query: Query, gtable: &GTable, config: &SearchConfig) -> Result<SearchOutcome> {
    let u = Arc::new(Universe::new(query.n, query.k)?);
    let root = root_node(&u, &query)?;
    run(u, query, gtable, config, vec![root], None, 0, None)
}

/// Continues a search from open nodes, appending to `prior` when given.
#[allow(clippy::too_many_arguments)]
pub fn run(
    u: Arc<Universe>,
    query: Query,
    gtable: &GTable,
    config: &SearchConfig,
    frontier: Vec<PendingNode>,
    prior: Option<ProofLog>,
    nodes_before: u64,
    mut sink: Option<&mut CheckpointSink<'_>>,
) -> Result<SearchOutcome> {
    let start = Instant::now();
    let rules = NegativeRules::new(query.n, query.k, query.t, gtable, query.strong);
    let mut log = prior.unwrap_or_else(|| ProofLog::new(header_for(&query, config, &rules)));
    log.footer = None;
    let mut engine = Engine { u: u.clone(), query, rules, config, lp: LpStats::default() };
    let strategy = config.strategy;
    let mut nodes = nodes_before;
    if query.t == 0 {
        log.footer = Some(Footer { result: Outcome::Holds, nodes });
        return Ok(SearchOutcome { verdict: Verdict::Holds, nodes, log, frontier: Vec::new(), lp: engine.lp, elapsed: start.elapsed() });
    }
    // stack top is the last element; restore so the first pending node is processed first
    let mut stack: Vec<Frame> = frontier.iter().rev().map(|p| frame_from_pending(&u, strategy, p)).collect::<Result<_>>()?;
    let budget_hit = |nodes: u64| {
        config.node_budget.is_some_and(|b| nodes - nodes_before >= b) || config.time_budget.is_some_and(|d| start.elapsed() >= d)
    };
    let mut last_ckpt = (nodes, Instant::now());
    let mut verdict = Verdict::Holds;
    if config.parallel > 1 {
        // expand sequentially until there is enough work to share
        while !stack.is_empty() && stack.len() < 4 * config.parallel && !budget_hit(nodes) {
            let f = stack.pop().unwrap();
            nodes += 1;
            match engine.process(f, &mut log.events)? {
                NodeResult::Closed => {}
                NodeResult::Expanded(neg, pos) => {
                    stack.push(*pos);
                    stack.push(*neg);
                }
                NodeResult::Found(w) => {
                    verdict = Verdict::Witness(w);
                    stack.clear();
                }
            }
        }
        if matches!(verdict, Verdict::Holds) && !stack.is_empty() && !budget_hit(nodes) {
            let (v, n2, rest, lp) = run_parallel(&engine, stack, &mut log, start, nodes, nodes_before)?;
            verdict = v;
            nodes = n2;
            stack = rest;
            engine.lp.solves += lp.solves;
            engine.lp.skipped += lp.skipped;
        }
    } else {
        while let Some(f) = stack.pop() {
            if budget_hit(nodes) {
                stack.push(f);
                break;
            }
            nodes += 1;
            match engine.process(f, &mut log.events)? {
                NodeResult::Closed => {}
                NodeResult::Expanded(neg, pos) => {
                    stack.push(*pos);
                    stack.push(*neg);
                }
                NodeResult::Found(w) => {
                    verdict = Verdict::Witness(w);
                    stack.clear();
                    break;
                }
            }
            if let Some(s) = sink.as_mut() {
                if nodes - last_ckpt.0 >= config.checkpoint_nodes || last_ckpt.1.elapsed() >= config.checkpoint_interval {
                    let frontier = stack.iter().rev().map(Frame::pending).collect();
                    s(&Snapshot { frontier, nodes, log: &log })?;
                    last_ckpt = (nodes, Instant::now());
                }
            }
        }
    }
    if !stack.is_empty() && matches!(verdict, Verdict::Holds) {
        verdict = Verdict::Indeterminate;
    }
    let frontier: Vec<PendingNode> = if matches!(verdict, Verdict::Indeterminate) {
        stack.iter().rev().map(Frame::pending).collect()
    } else {
        Vec::new()
    };
    log.footer = Some(Footer { result: verdict.outcome(), nodes });
    Ok(SearchOutcome { verdict, nodes, log, frontier, lp: engine.lp, elapsed: start.elapsed() })
}

type ParallelResult = (Verdict, u64, Vec<Frame>, LpStats);

fn run_parallel(
    engine: &Engine<'_>,
    stack: Vec<Frame>,
    log: &mut ProofLog,
    start: Instant,
    nodes: u64,
    nodes_before: u64,
) -> Result<ParallelResult> {
    let config = engine.config;
    // subtrees in stack-pop order
    let jobs: Vec<Frame> = stack.into_iter().rev().collect();
    let njobs = jobs.len();
    let queue = Mutex::new(jobs.into_iter().enumerate().collect::<Vec<_>>());
    queue.lock().unwrap().reverse();
    let cancel = AtomicBool::new(false);
    let used = std::sync::atomic::AtomicU64::new(nodes);
    type JobOut = (Vec<Event>, Option<Witness>, Vec<Frame>, LpStats, bool);
    let results: Mutex<Vec<Option<Result<JobOut>>>> = Mutex::new((0..njobs).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..config.parallel {
            scope.spawn(|| {
                let mut eng = Engine { u: engine.u.clone(), query: engine.query, rules: engine.rules, config, lp: LpStats::default() };
                loop {
                    let Some((idx, job)) = queue.lock().unwrap().pop() else { break };
                    let mut events = Vec::new();
                    let mut stack = vec![job];
                    let mut found = None;
                    let mut err = None;
                    let mut stopped = false;
                    while let Some(f) = stack.pop() {
                        let n = used.load(AtomicOrdering::Relaxed);
                        if cancel.load(AtomicOrdering::Relaxed)
                            || config.node_budget.is_some_and(|b| n - nodes_before >= b)
                            || config.time_budget.is_some_and(|d| start.elapsed() >= d)
                        {
                            stack.push(f);
                            stopped = true;
                            break;
                        }
                        used.fetch_add(1, AtomicOrdering::Relaxed);
                        match eng.process(f, &mut events) {
                            Ok(NodeResult::Closed) => {}
                            Ok(NodeResult::Expanded(neg, pos)) => {
                                stack.push(*pos);
                                stack.push(*neg);
                            }
                            Ok(NodeResult::Found(w)) => {
                                found = Some(w);
                                cancel.store(true, AtomicOrdering::Relaxed);
                                stack.clear();
                                break;
                            }
                            Err(e) => {
                                err = Some(e);
                                cancel.store(true, AtomicOrdering::Relaxed);
                                break;
                            }
                        }
                    }
                    let out = match err {
                        Some(e) => Err(e),
                        None => Ok((events, found, stack, eng.lp, stopped)),
                    };
                    results.lock().unwrap()[idx] = Some(out);
                }
            });
        }
    });
    let mut verdict = Verdict::Holds;
    let mut rest = Vec::new();
    let mut lp = LpStats::default();
    for r in results.into_inner().unwrap().into_iter().flatten() {
        match r {
            Err(e) => return Err(e),
            Ok((events, found, left, stats, stopped)) => {
                lp.solves += stats.solves;
                lp.skipped += stats.skipped;
                log.events.extend(events);
                if let Some(w) = found {
                    if !matches!(verdict, Verdict::Witness(_)) {
                        verdict = Verdict::Witness(w);
                    }
                }
                if stopped {
                    rest.extend(left.into_iter().rev());
                }
            }
        }
    }
    // frontier is returned in stack order (last = next to process)
    let rest: Vec<Frame> = rest.into_iter().rev().collect();
    Ok((verdict, used.into_inner(), rest, lp))
}
