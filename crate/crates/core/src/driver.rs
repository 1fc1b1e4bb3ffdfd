//! Top-level computations of `g(n, k)`, `f(k)`, `g_s(n, k)` and `N_k`.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::binom::{binomial, binomial_big};
use crate::checkpoint::Checkpoint;
use crate::error::{Error, Result};
use crate::exact;
use crate::lp::count_nonneg_ksums;
use crate::prooflog::{Outcome, ProofLog};
use crate::propagation::{tail_set, GTable, Provenance};
use crate::search::{self, Query, SearchConfig, SearchOutcome, Verdict};
use crate::universe::Universe;

pub const SCHEMA_VERSION: u32 = 1;

/// `s_k` of the vector with `b` entries equal to `a` followed by `a` entries equal to `-b`.
pub fn two_value_s(a: u64, b: u64, k: u64) -> u64 {
    (0..=k.min(b))
        .filter(|&j| j * a >= (k - j) * b)
        .map(|j| binomial(b, j).unwrap() * binomial(a, k - j).unwrap())
        .sum()
}

/// The explicit two-value vector `a^b (-b)^a`.
pub fn two_value_vector(a: u64, b: u64) -> Vec<BigRational> {
    let pos = BigRational::from_integer(BigInt::from(a));
    let neg = BigRational::from_integer(-BigInt::from(b));
    std::iter::repeat_n(pos, b as usize).chain(std::iter::repeat_n(neg, a as usize)).collect()
}

/// Minimum of [`two_value_s`] over `a + b = n`, with the smallest `a` among minimizers.
pub fn scan_two_value(n: u64, k: u64) -> Result<(u64, (u64, u64))> {
    if n <= k || k == 0 {
        return Err(Error::InvalidParameters(format!("need n > k >= 1, got n={n}, k={k}")));
    }
    Ok((1..n).map(|a| (two_value_s(a, n - a, k), (a, n - a))).min_by_key(|&(s, (a, _))| (s, a)).unwrap())
}

/// Smallest `N > k` with `C(N-3, k) >= C(N-1, k-1)`.
pub fn compute_nk(k: u64) -> Result<u64> {
    if k < 2 {
        return Err(Error::InvalidParameters("k must be at least 2".into()));
    }
    // start at N = k + 3, the first N with C(N-3, k) > 0
    let mut n = k + 3;
    let mut lhs = binomial_big(n - 3, k);
    let mut rhs = binomial_big(n - 1, k - 1);
    while lhs < rhs {
        lhs = lhs * (n - 2) / (n - 2 - k);
        rhs = rhs * n / (n - k + 1);
        n += 1;
    }
    Ok(n)
}

/// Power notation such as `3^7 (-7)^3`. Non-integral vectors are first scaled to coprime integers.
pub fn descriptor(x: &[BigRational]) -> String {
    let lcm = x.iter().fold(BigInt::one(), |l, q| l.lcm(q.denom()));
    let mut ints: Vec<BigInt> = x.iter().map(|q| q.numer() * (&lcm / q.denom())).collect();
    if !lcm.is_one() {
        let g = ints.iter().fold(BigInt::zero(), |g, v| g.gcd(v));
        if !g.is_zero() {
            ints.iter_mut().for_each(|v| *v /= &g);
        }
    }
    let mut parts: Vec<String> = Vec::new();
    let mut i = 0;
    while i < ints.len() {
        let mut j = i;
        while j < ints.len() && ints[j] == ints[i] {
            j += 1;
        }
        let v = &ints[i];
        let base = if v.is_negative() { format!("({v})") } else { v.to_string() };
        parts.push(format!("{base}^{}", j - i));
        i = j;
    }
    parts.join(" ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QueryKind {
    G,
    F,
    Gs,
    TwoValue,
    Nk,
    Verify,
}

/// One row of a `g(n, k)` table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    #[serde(with = "exact::dec")]
    pub k: u64,
    #[serde(with = "exact::dec")]
    pub n: u64,
    #[serde(with = "exact::dec")]
    pub g: u64,
    #[serde(with = "exact::dec")]
    pub ghat: u64,
    #[serde(with = "exact::dec")]
    pub nodes: u64,
    pub time_s: f64,
    pub example: String,
    pub provenance: Provenance,
}

impl TableRow {
    pub const CSV_HEADER: &'static str = "k,n,g,ghat,nodes,time,example";

    pub fn csv(&self) -> String {
        format!("{},{},{},{},{},{:.3},\"{}\"", self.k, self.n, self.g, self.ghat, self.nodes, self.time_s, self.example)
    }
}

/// Outcome of a driver computation, written as versioned JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub schema: u32,
    pub kind: QueryKind,
    #[serde(default, with = "exact::opt_dec")]
    pub n: Option<u64>,
    #[serde(with = "exact::dec")]
    pub k: u64,
    /// Last threshold verified.
    #[serde(default, with = "exact::opt_dec")]
    pub t: Option<u64>,
    pub verdict: Outcome,
    #[serde(default, with = "exact::opt_dec")]
    pub value: Option<u64>,
    /// `C(n-1, k-1) - g(n, k)`.
    #[serde(default, with = "exact::opt_dec")]
    pub deficiency: Option<u64>,
    pub provenance: Option<Provenance>,
    pub example: Option<String>,
    #[serde(default, with = "opt_vec")]
    pub witness: Option<Vec<BigRational>>,
    /// Thresholds tried, in order.
    #[serde(default, with = "dec_u64_vec")]
    pub thresholds: Vec<u64>,
    #[serde(with = "exact::dec")]
    pub nodes: u64,
    pub wall_time_s: f64,
    #[serde(with = "exact::dec")]
    pub seed: u64,
    pub proof_log: Option<String>,
    pub checkpoint: Option<String>,
    #[serde(default)]
    pub rows: Vec<TableRow>,
}

mod opt_vec {
    use num_rational::BigRational;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<BigRational>>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(v) => s.collect_seq(v.iter().map(|q| q.to_string())),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<BigRational>>, D::Error> {
        Option::<Vec<String>>::deserialize(d)?
            .map(|v| v.iter().map(|t| crate::exact::parse_rational(t).map_err(serde::de::Error::custom)).collect())
            .transpose()
    }
}

mod dec_u64_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u64], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.to_string()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u64>, D::Error> {
        Vec::<String>::deserialize(d)?.iter().map(|t| t.parse().map_err(serde::de::Error::custom)).collect()
    }
}

impl RunResult {
    /// An empty result to be filled in by the caller.
    pub fn summary(kind: QueryKind, n: Option<u64>, k: u64, seed: u64) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            kind,
            n,
            k,
            t: None,
            verdict: Outcome::Holds,
            value: None,
            deficiency: None,
            provenance: None,
            example: None,
            witness: None,
            thresholds: Vec::new(),
            nodes: 0,
            wall_time_s: 0.0,
            seed,
            proof_log: None,
            checkpoint: None,
            rows: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn is_determined(&self) -> bool {
        self.verdict != Outcome::Indeterminate
    }

    /// The table row of a `g` or `g_s` result.
    pub fn row(&self) -> Option<TableRow> {
        Some(TableRow {
            k: self.k,
            n: self.n?,
            g: self.value?,
            ghat: self.deficiency.unwrap_or(0),
            nodes: self.nodes,
            time_s: self.wall_time_s,
            example: self.example.clone().unwrap_or_default(),
            provenance: self.provenance.unwrap_or(Provenance::Computed),
        })
    }
}

/// Settings shared by the driver computations.
#[derive(Clone, Debug, Default)]
pub struct DriverOptions {
    pub search: SearchConfig,
    /// Use `g = C(n-1, k-1)` without search when `k` divides `n`.
    pub baranyai: bool,
    /// Where to write the text proof log of the final search (plus a `.json` mirror).
    pub log_path: Option<PathBuf>,
    pub checkpoint_path: Option<PathBuf>,
}

impl DriverOptions {
    pub fn new(search: SearchConfig) -> Self {
        Self { search, baranyai: true, log_path: None, checkpoint_path: None }
    }
}

/// Best known vector for the current threshold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    #[serde(with = "exact::rational_vec")]
    pub x: Vec<BigRational>,
    #[serde(with = "exact::dec")]
    pub s: u64,
}

fn sigma_negative(x: &[BigRational], n: usize, k: usize) -> bool {
    tail_set(n, k).sum_of(x).is_negative()
}

/// Starting threshold for `g` and its example.
fn g_start(n: u64, k: u64) -> Result<Example> {
    let (s, (a, b)) = scan_two_value(n, k)?;
    Ok(Example { x: two_value_vector(a, b), s })
}

/// Starting threshold for `g_s`: best two-value vector negative on the tail set,
/// otherwise `C(n, k) + 1` with no example.
fn gs_start(n: u64, k: u64) -> Option<Example> {
    (1..n)
        .filter(|&a| sigma_negative(&two_value_vector(a, n - a), n as usize, k as usize))
        .map(|a| (two_value_s(a, n - a, k), a))
        .min()
        .map(|(s, a)| Example { x: two_value_vector(a, n - a), s })
}

struct Descent {
    kind: QueryKind,
    query: Query,
    example: Option<Example>,
}

fn write_log(path: &Option<PathBuf>, log: &ProofLog) -> Result<Option<String>> {
    let Some(p) = path else { return Ok(None) };
    std::fs::write(p, log.to_text())?;
    let mut json = p.clone().into_os_string();
    json.push(".json");
    std::fs::write(&json, log.to_json())?;
    Ok(Some(p.display().to_string()))
}

fn checkpoint_sink<'a>(
    path: &'a Path,
    d: &'a Descent,
    opts: &'a DriverOptions,
    gtable: &'a GTable,
    started: Instant,
) -> impl FnMut(&search::Snapshot<'_>) -> Result<()> + 'a {
    move |snap| {
        let ck = Checkpoint::new(d.kind, d.query, opts, gtable, snap, d.example.clone(), started.elapsed().as_secs_f64());
        ck.save(path)
    }
}

fn run_descent(
    mut d: Descent,
    gtable: &GTable,
    opts: &DriverOptions,
    mut resume: Option<(Arc<Universe>, Vec<search::PendingNode>, ProofLog, u64)>,
    mut result: RunResult,
) -> Result<RunResult> {
    let started = Instant::now();
    loop {
        result.thresholds.push(d.query.t);
        let out: SearchOutcome = {
            let path = opts.checkpoint_path.clone();
            let mut sink_fn = path.as_ref().map(|p| checkpoint_sink(p, &d, opts, gtable, started));
            let sink = sink_fn.as_mut().map(|f| f as &mut search::CheckpointSink<'_>);
            match resume.take() {
                Some((u, frontier, log, nodes)) => search::run(u, d.query, gtable, &opts.search, frontier, Some(log), nodes, sink)?,
                None => {
                    let u = Arc::new(Universe::new(d.query.n, d.query.k)?);
                    let root = search::root_node(&u, &d.query)?;
                    search::run(u, d.query, gtable, &opts.search, vec![root], None, 0, sink)?
                }
            }
        };
        result.nodes += out.nodes;
        result.t = Some(d.query.t);
        match out.verdict {
            Verdict::Witness(w) => {
                debug_assert!(w.s < d.query.t);
                d.example = Some(Example { x: w.x, s: w.s });
                d.query.t = w.s;
            }
            Verdict::Holds => {
                result.proof_log = write_log(&opts.log_path, &out.log)?;
                let ex = d.example.clone().ok_or_else(|| {
                    Error::InvalidParameters(format!("threshold {} holds but no vector attains it", d.query.t))
                })?;
                finish_value(&mut result, d.query, d.kind, &ex);
                result.wall_time_s += started.elapsed().as_secs_f64();
                return Ok(result);
            }
            Verdict::Indeterminate => {
                result.verdict = Outcome::Indeterminate;
                result.proof_log = write_log(&opts.log_path, &out.log)?;
                if let Some(p) = &opts.checkpoint_path {
                    let snap = search::Snapshot { frontier: out.frontier.clone(), nodes: out.nodes, log: &out.log };
                    Checkpoint::new(d.kind, d.query, opts, gtable, &snap, d.example.clone(), started.elapsed().as_secs_f64()).save(p)?;
                    result.checkpoint = Some(p.display().to_string());
                }
                result.wall_time_s += started.elapsed().as_secs_f64();
                return Ok(result);
            }
        }
    }
}

fn finish_value(result: &mut RunResult, q: Query, kind: QueryKind, ex: &Example) {
    let recount = count_nonneg_ksums(&ex.x, q.k);
    assert_eq!(recount, ex.s, "example re-scores differently");
    result.verdict = Outcome::Holds;
    result.value = Some(q.t);
    result.example = Some(descriptor(&ex.x));
    result.witness = Some(ex.x.clone());
    result.provenance = Some(Provenance::Computed);
    if kind == QueryKind::G {
        let top = binomial(q.n as u64 - 1, q.k as u64 - 1).unwrap();
        result.deficiency = Some(top - q.t);
    }
}

/// `g(n, k)` by t-descent from the best two-value vector.
pub fn compute_g(n: u64, k: u64, gtable: &GTable, opts: &DriverOptions) -> Result<RunResult> {
    let mut result = RunResult::summary(QueryKind::G, Some(n), k, opts.search.propagation.rng_seed);
    if n <= k {
        return Err(Error::InvalidParameters(format!("need n > k, got n={n}, k={k}")));
    }
    if opts.baranyai && n.is_multiple_of(k) {
        let g = binomial(n - 1, k - 1).unwrap();
        result.value = Some(g);
        result.t = Some(g);
        result.deficiency = Some(0);
        result.provenance = Some(Provenance::Baranyai);
        let x = two_value_vector(n - 1, 1);
        result.example = Some(descriptor(&x));
        result.witness = Some(x);
        return Ok(result);
    }
    let ex = g_start(n, k)?;
    let query = Query { n: n as usize, k: k as usize, t: ex.s, strong: false };
    run_descent(Descent { kind: QueryKind::G, query, example: Some(ex) }, gtable, opts, None, result)
}

/// `g_s(n, k)`: the minimum over vectors negative on `{1, n-k+2, ..., n}`.
pub fn compute_g_strong(n: u64, k: u64, gtable: &GTable, opts: &DriverOptions) -> Result<RunResult> {
    if n <= k {
        return Err(Error::InvalidParameters(format!("need n > k, got n={n}, k={k}")));
    }
    let result = RunResult::summary(QueryKind::Gs, Some(n), k, opts.search.propagation.rng_seed);
    let ex = gs_start(n, k);
    let t = match &ex {
        Some(e) => e.s,
        None => binomial(n, k).unwrap() + 1,
    };
    let query = Query { n: n as usize, k: k as usize, t, strong: true };
    run_descent(Descent { kind: QueryKind::Gs, query, example: ex }, gtable, opts, None, result)
}

/// `f(k)`: scans `n` upward until `k` consecutive values have zero deficiency.
///
/// Every computed value is added to `gtable`.
pub fn compute_f(k: u64, gtable: &mut GTable, opts: &DriverOptions) -> Result<RunResult> {
    let started = Instant::now();
    let mut result = RunResult::summary(QueryKind::F, None, k, opts.search.propagation.rng_seed);
    if k < 2 {
        return Err(Error::InvalidParameters("k must be at least 2".into()));
    }
    let mut last_nonzero = k;
    let mut n = k + 1;
    while n - last_nonzero <= k {
        let mut o = opts.clone();
        o.log_path = opts.log_path.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(format!(".n{n}"));
            PathBuf::from(s)
        });
        let r = compute_g(n, k, gtable, &o)?;
        result.nodes += r.nodes;
        if !r.is_determined() {
            result.verdict = Outcome::Indeterminate;
            result.checkpoint = r.checkpoint.clone();
            result.rows.extend(r.row());
            result.wall_time_s = started.elapsed().as_secs_f64();
            return Ok(result);
        }
        let g = r.value.unwrap();
        gtable.insert(n as usize, k as usize, g, r.provenance.unwrap())?;
        if r.deficiency.unwrap() > 0 {
            last_nonzero = n;
        }
        result.rows.extend(r.row());
        n += 1;
    }
    result.value = Some(last_nonzero + 1);
    result.wall_time_s = started.elapsed().as_secs_f64();
    Ok(result)
}

/// Continues an interrupted computation from a checkpoint.
pub fn resume(ck: Checkpoint, opts: &DriverOptions) -> Result<RunResult> {
    let gtable = ck.gtable.clone();
    let u = Arc::new(Universe::new(ck.query.n, ck.query.k)?);
    let mut result = RunResult::summary(ck.kind, Some(ck.query.n as u64), ck.query.k as u64, ck.config.propagation.rng_seed);
    result.wall_time_s = ck.elapsed_s;
    let mut o = opts.clone();
    o.search = SearchConfig {
        node_budget: opts.search.node_budget,
        time_budget: opts.search.time_budget,
        parallel: opts.search.parallel,
        checkpoint_nodes: opts.search.checkpoint_nodes,
        checkpoint_interval: opts.search.checkpoint_interval,
        ..ck.config.clone()
    };
    let d = Descent { kind: ck.kind, query: ck.query, example: ck.example.clone() };
    let resume = Some((u, ck.frontier, ck.log, ck.nodes));
    run_descent(d, &gtable, &o, resume, result)
}

/// Single threshold check without descent.
pub fn verify(query: Query, gtable: &GTable, opts: &DriverOptions) -> Result<(RunResult, SearchOutcome)> {
    let out = search::verify_g(query, gtable, &opts.search)?;
    let mut r = RunResult::summary(QueryKind::Verify, Some(query.n as u64), query.k as u64, opts.search.propagation.rng_seed);
    r.t = Some(query.t);
    r.thresholds.push(query.t);
    r.verdict = out.verdict.outcome();
    r.nodes = out.nodes;
    r.wall_time_s = out.elapsed.as_secs_f64();
    if let Verdict::Witness(w) = &out.verdict {
        r.example = Some(descriptor(&w.x));
        r.witness = Some(w.x.clone());
        r.value = Some(w.s);
    }
    r.proof_log = write_log(&opts.log_path, &out.log)?;
    Ok((r, out))
}

/// Runs [`compute_nk`] for `k` in a range and returns CSV lines `k,N_k,N_k/k`.
pub fn nk_csv(ks: std::ops::RangeInclusive<u64>) -> Result<String> {
    let mut out = String::from("k,N_k,ratio\n");
    for k in ks {
        let n = compute_nk(k)?;
        out.push_str(&format!("{k},{n},{:.6}\n", n as f64 / k as f64));
    }
    Ok(out)
}
