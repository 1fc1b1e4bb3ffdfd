//! Line-oriented proof logs, their JSON mirror and an independent replay checker.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{self, parse_rational};
use crate::lp::LpVerdict;
use crate::poset::KSet;
use crate::propagation::Mode;

pub const FORMAT_VERSION: u32 = 1;

/// Sign given to a k-set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Dir {
    Neg,
    Pos,
}

/// Justification for a propagated k-set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// `L_k(S) ≥ t`.
    #[serde(rename = "LEFT-SHIFT")]
    LeftShift,
    /// `1 ∈ S` and `L_k(S) + g(n-k, k) ≥ t`.
    #[serde(rename = "TAIL-BOUND")]
    TailBound,
    /// `L*_k(S) + |L_k(A⁺)| ≥ t`.
    #[serde(rename = "UNION-COUNT")]
    UnionCount,
    /// `P(A⁺, A⁻ ∪ {S})` is infeasible, so `S` is nonnegative.
    #[serde(rename = "LP-NEG-PROBE")]
    LpNegProbe,
    /// `P(A⁺ ∪ {S}, A⁻)` is infeasible, so `S` is negative.
    #[serde(rename = "LP-POS-PROBE")]
    LpPosProbe,
}

impl Rule {
    pub fn token(self) -> &'static str {
        match self {
            Rule::LeftShift => "LEFT-SHIFT",
            Rule::TailBound => "TAIL-BOUND",
            Rule::UnionCount => "UNION-COUNT",
            Rule::LpNegProbe => "LP-NEG-PROBE",
            Rule::LpPosProbe => "LP-POS-PROBE",
        }
    }
}

impl FromStr for Rule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        [Rule::LeftShift, Rule::TailBound, Rule::UnionCount, Rule::LpNegProbe, Rule::LpPosProbe]
            .into_iter()
            .find(|r| r.token() == s)
            .ok_or_else(|| format!("unknown rule {s:?}"))
    }
}

/// Why a search node was closed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CloseReason {
    /// At least `t` sets are forced nonnegative.
    Threshold,
    /// The program of the node is infeasible.
    Infeasible,
    /// A set was forced both ways.
    Conflict,
    /// The node produced a bad vector.
    Witness,
    /// Both children were queued.
    Expanded,
    /// Node or time budget ran out before the node was processed.
    Budget,
}

impl CloseReason {
    pub fn token(self) -> &'static str {
        match self {
            CloseReason::Threshold => "THRESHOLD",
            CloseReason::Infeasible => "INFEASIBLE",
            CloseReason::Conflict => "CONFLICT",
            CloseReason::Witness => "WITNESS",
            CloseReason::Expanded => "EXPANDED",
            CloseReason::Budget => "BUDGET",
        }
    }
}

/// Final verdict of a log.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Holds,
    Witness,
    Indeterminate,
}

impl Outcome {
    pub fn token(self) -> &'static str {
        match self {
            Outcome::Holds => "HOLDS",
            Outcome::Witness => "WITNESS",
            Outcome::Indeterminate => "INDETERMINATE",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "UPPERCASE")]
pub enum Event {
    /// Opens a node; `path` is the string of branch directions from the root (`0` negative).
    Node { path: String, depth: u32 },
    /// A set fixed negative at the root by the query itself.
    Fix { set: KSet },
    /// The branch set of the node just opened.
    Branch { set: KSet, dir: Dir },
    /// A propagated set.
    Round {
        round: u32,
        dir: Dir,
        set: KSet,
        rule: Rule,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cert: Option<String>,
    },
    /// Current number of sets forced nonnegative.
    Count {
        #[serde(with = "exact::dec")]
        pos: u64,
    },
    /// Solve of the program for the current families.
    Lp {
        verdict: LpVerdict,
        #[serde(default, with = "exact::opt_rational", skip_serializing_if = "Option::is_none")]
        objective: Option<BigRational>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cert: Option<String>,
    },
    /// A bad vector with `s` nonnegative k-sums.
    Witness {
        #[serde(with = "exact::dec")]
        s: u64,
        #[serde(with = "exact::rational_vec")]
        x: Vec<BigRational>,
    },
    Close { path: String, reason: CloseReason },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub version: u32,
    pub n: usize,
    pub k: usize,
    #[serde(with = "exact::dec")]
    pub t: u64,
    pub mode: Mode,
    /// The root fixes `{1, n-k+2, ..., n}` negative.
    pub strong: bool,
    #[serde(with = "exact::dec")]
    pub seed: u64,
    /// Lower bound on `g(n-k, k)` used by the tail rule, `0` when the rule is off.
    #[serde(with = "exact::dec")]
    pub tail: u64,
    pub config: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Footer {
    pub result: Outcome,
    #[serde(with = "exact::dec")]
    pub nodes: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofLog {
    pub header: Header,
    pub events: Vec<Event>,
    pub footer: Option<Footer>,
}

pub(crate) fn path_token(path: &str) -> &str {
    if path.is_empty() {
        "-"
    } else {
        path
    }
}

fn dir_token(d: Dir) -> &'static str {
    match d {
        Dir::Neg => "NEG",
        Dir::Pos => "POS",
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Node { path, depth } => write!(f, "NODE PATH={} DEPTH={depth}", path_token(path)),
            Event::Fix { set } => write!(f, "FIX {set} DIR=NEG"),
            Event::Branch { set, dir } => write!(f, "BRANCH {set} DIR={}", dir_token(*dir)),
            Event::Round { round, dir, set, rule, cert } => {
                write!(f, "ROUND {round} {} {set} RULE={}", dir_token(*dir), rule.token())?;
                if let Some(c) = cert {
                    write!(f, " CERT={c}")?;
                }
                Ok(())
            }
            Event::Count { pos } => write!(f, "COUNT {pos}"),
            Event::Lp { verdict, objective, cert } => {
                match verdict {
                    LpVerdict::Optimal => write!(f, "LP VERDICT=OPT")?,
                    LpVerdict::Infeasible => write!(f, "LP VERDICT=INFEASIBLE")?,
                }
                if let Some(o) = objective {
                    write!(f, " OBJ={o}")?;
                }
                if let Some(c) = cert {
                    write!(f, " CERT={c}")?;
                }
                Ok(())
            }
            Event::Witness { s, x } => {
                write!(f, "WITNESS S={s} X=")?;
                for (i, q) in x.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{q}")?;
                }
                Ok(())
            }
            Event::Close { path, reason } => write!(f, "CLOSE PATH={} REASON={}", path_token(path), reason.token()),
        }
    }
}

impl ProofLog {
    pub fn new(header: Header) -> Self {
        Self { header, events: Vec::new(), footer: None }
    }

    /// The line-oriented text form.
    pub fn to_text(&self) -> String {
        let h = &self.header;
        let mut out = format!("MMS-PROOF {}\n", h.version);
        let _ = writeln!(
            out,
            "HEADER N={} K={} T={} MODE={} STRONG={} SEED={} TAIL={} CONFIG={}",
            h.n,
            h.k,
            h.t,
            h.mode.token(),
            u8::from(h.strong),
            h.seed,
            h.tail,
            h.config
        );
        for e in &self.events {
            let _ = writeln!(out, "{e}");
        }
        if let Some(ft) = &self.footer {
            let _ = writeln!(out, "RESULT {} NODES={}", ft.result.token(), ft.nodes);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Parses the text form produced by [`to_text`](Self::to_text).
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let err = |line: usize, msg: String| Error::Parse { line: line + 1, msg };
        let (ln, first) = lines.next().ok_or_else(|| err(0, "empty log".into()))?;
        let version: u32 = first
            .strip_prefix("MMS-PROOF ")
            .and_then(|v| v.trim().parse().ok())
            .ok_or_else(|| err(ln, "missing MMS-PROOF line".into()))?;
        let (ln, hline) = lines.next().ok_or_else(|| err(ln, "missing HEADER".into()))?;
        let kv = fields(hline.strip_prefix("HEADER ").ok_or_else(|| err(ln, "missing HEADER".into()))?);
        let get = |key: &str| kv.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).ok_or_else(|| err(ln, format!("missing {key}")));
        let num = |key: &str| -> Result<u64> { get(key)?.parse().map_err(|e| err(ln, format!("{key}: {e}"))) };
        let header = Header {
            version,
            n: num("N")? as usize,
            k: num("K")? as usize,
            t: num("T")?,
            mode: get("MODE")?.parse().map_err(|e| err(ln, e))?,
            strong: num("STRONG")? == 1,
            seed: num("SEED")?,
            tail: num("TAIL")?,
            config: get("CONFIG")?.to_string(),
        };
        let mut log = ProofLog::new(header);
        for (ln, line) in lines {
            let line = line.trim();
            let (tag, rest) = line.split_once(' ').unwrap_or((line, ""));
            let kv = fields(rest);
            let val = |key: &str| kv.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).ok_or_else(|| err(ln, format!("missing {key}")));
            let set_arg = || -> Result<KSet> {
                let tok = rest.split_whitespace().find(|w| w.starts_with('{')).ok_or_else(|| err(ln, "missing set".into()))?;
                tok.parse().map_err(|e: Error| err(ln, e.to_string()))
            };
            let dir = |s: &str| match s {
                "NEG" => Ok(Dir::Neg),
                "POS" => Ok(Dir::Pos),
                _ => Err(err(ln, format!("bad direction {s:?}"))),
            };
            let path_of = |s: &str| if s == "-" { String::new() } else { s.to_string() };
            let event = match tag {
                "NODE" => Event::Node {
                    path: path_of(val("PATH")?),
                    depth: val("DEPTH")?.parse().map_err(|_| err(ln, "bad DEPTH".into()))?,
                },
                "FIX" => Event::Fix { set: set_arg()? },
                "BRANCH" => Event::Branch { set: set_arg()?, dir: dir(val("DIR")?)? },
                "ROUND" => {
                    let mut words = rest.split_whitespace();
                    let round = words.next().and_then(|w| w.parse().ok()).ok_or_else(|| err(ln, "bad round".into()))?;
                    let d = dir(words.next().unwrap_or(""))?;
                    Event::Round {
                        round,
                        dir: d,
                        set: set_arg()?,
                        rule: val("RULE")?.parse().map_err(|e| err(ln, e))?,
                        cert: val("CERT").ok().map(str::to_string),
                    }
                }
                "COUNT" => Event::Count { pos: rest.trim().parse().map_err(|_| err(ln, "bad count".into()))? },
                "LP" => Event::Lp {
                    verdict: match val("VERDICT")? {
                        "OPT" => LpVerdict::Optimal,
                        "INFEASIBLE" => LpVerdict::Infeasible,
                        v => return Err(err(ln, format!("bad verdict {v:?}"))),
                    },
                    objective: val("OBJ").ok().map(parse_rational).transpose().map_err(|e| err(ln, e))?,
                    cert: val("CERT").ok().map(str::to_string),
                },
                "WITNESS" => Event::Witness {
                    s: val("S")?.parse().map_err(|_| err(ln, "bad S".into()))?,
                    x: val("X")?.split(',').map(parse_rational).collect::<Result<_, _>>().map_err(|e| err(ln, e))?,
                },
                "CLOSE" => Event::Close {
                    path: path_of(val("PATH")?),
                    reason: match val("REASON")? {
                        "THRESHOLD" => CloseReason::Threshold,
                        "INFEASIBLE" => CloseReason::Infeasible,
                        "CONFLICT" => CloseReason::Conflict,
                        "WITNESS" => CloseReason::Witness,
                        "EXPANDED" => CloseReason::Expanded,
                        "BUDGET" => CloseReason::Budget,
                        r => return Err(err(ln, format!("bad reason {r:?}"))),
                    },
                },
                "RESULT" => {
                    let word = rest.split_whitespace().next().unwrap_or("");
                    let result = match word {
                        "HOLDS" => Outcome::Holds,
                        "WITNESS" => Outcome::Witness,
                        "INDETERMINATE" => Outcome::Indeterminate,
                        _ => return Err(err(ln, format!("bad result {word:?}"))),
                    };
                    let nodes = val("NODES")?.parse().map_err(|_| err(ln, "bad NODES".into()))?;
                    log.footer = Some(Footer { result, nodes });
                    continue;
                }
                _ => return Err(err(ln, format!("unknown line {line:?}"))),
            };
            if log.footer.is_some() {
                return Err(err(ln, "event after RESULT".into()));
            }
            log.events.push(event);
        }
        Ok(log)
    }

    /// Sets added in round `r` with the given direction, in log order.
    pub fn round_sets(&self, r: u32, d: Dir) -> Vec<KSet> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Round { round, dir, set, .. } if *round == r && *dir == d => Some(set.clone()),
                _ => None,
            })
            .collect()
    }
}

fn fields(s: &str) -> Vec<(&str, &str)> {
    s.split_whitespace().filter_map(|w| w.split_once('=')).collect()
}
