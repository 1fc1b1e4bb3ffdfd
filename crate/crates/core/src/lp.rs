//! The program `P(n, k, A⁺, A⁻)` in exact rational arithmetic.
//!
//! minimize `x_1` subject to `Σ x_i ≥ 0`, `x_i - x_{i+1} ≥ 0`,
//! `Σ_{i∈S} x_i ≥ 0` for `S ∈ A⁺` and `Σ_{i∈T} x_i ≤ -1` for `T ∈ A⁻`.

use std::cmp::Ordering;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::binom::binomial;
use crate::error::{Error, Result};
use crate::poset::KSet;
use crate::universe::Universe;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sense {
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
}

/// Role of a constraint row.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Total,
    Order,
    Nonneg,
    Neg,
}

/// A sparse row `Σ coef·x_var (sense) rhs` with 0-based variable indices.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Row {
    pub kind: RowKind,
    pub terms: Vec<(u16, i8)>,
    pub sense: Sense,
    pub rhs: i8,
}

impl Row {
    fn lhs(&self, x: &[BigRational]) -> BigRational {
        self.terms
            .iter()
            .map(|&(v, c)| &x[v as usize] * BigRational::from_integer(c.into()))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    fn holds(&self, x: &[BigRational]) -> bool {
        let lhs = self.lhs(x);
        let rhs = BigRational::from_integer(self.rhs.into());
        match self.sense {
            Sense::Ge => lhs >= rhs,
            Sense::Le => lhs <= rhs,
        }
    }
}

/// The constraint system for given families; objective is always `min x_1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LpInstance {
    n: usize,
    k: usize,
    aplus: Vec<KSet>,
    aminus: Vec<KSet>,
    rows: Vec<Row>,
}

fn dedup(sets: &[KSet]) -> Vec<KSet> {
    let mut seen = std::collections::HashSet::new();
    sets.iter().filter(|s| seen.insert((*s).clone())).cloned().collect()
}

/// Builds the program; duplicate sets are dropped, keeping the first occurrence.
pub fn build_lp(n: usize, k: usize, aplus: &[KSet], aminus: &[KSet]) -> Result<LpInstance> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameters(format!("need 1 <= k <= n, got n={n}, k={k}")));
    }
    for s in aplus.iter().chain(aminus) {
        if s.k() != k {
            return Err(Error::CardinalityMismatch { left: s.k(), right: k });
        }
        s.check_within(n)?;
    }
    let aplus = dedup(aplus);
    let aminus = dedup(aminus);
    let mut rows = Vec::with_capacity(n + aplus.len() + aminus.len());
    rows.push(Row {
        kind: RowKind::Total,
        terms: (0..n as u16).map(|i| (i, 1)).collect(),
        sense: Sense::Ge,
        rhs: 0,
    });
    for i in 0..n as u16 - 1 {
        rows.push(Row { kind: RowKind::Order, terms: vec![(i, 1), (i + 1, -1)], sense: Sense::Ge, rhs: 0 });
    }
    let set_terms = |s: &KSet| s.elements().iter().map(|&e| (e as u16 - 1, 1i8)).collect::<Vec<_>>();
    for s in &aplus {
        rows.push(Row { kind: RowKind::Nonneg, terms: set_terms(s), sense: Sense::Ge, rhs: 0 });
    }
    for s in &aminus {
        rows.push(Row { kind: RowKind::Neg, terms: set_terms(s), sense: Sense::Le, rhs: -1 });
    }
    Ok(LpInstance { n, k, aplus, aminus, rows })
}

/// [`build_lp`] from colex ranks of a universe.
pub fn build_lp_ranks(u: &Universe, aplus: &[u32], aminus: &[u32]) -> LpInstance {
    let p: Vec<KSet> = aplus.iter().map(|&r| u.kset(r)).collect();
    let m: Vec<KSet> = aminus.iter().map(|&r| u.kset(r)).collect();
    build_lp(u.n(), u.k(), &p, &m).expect("universe sets are valid")
}

impl LpInstance {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn aplus(&self) -> &[KSet] {
        &self.aplus
    }

    pub fn aminus(&self) -> &[KSet] {
        &self.aminus
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    /// Mutable access for building perturbed instances in audits.
    pub fn rows_mut(&mut self) -> &mut Vec<Row> {
        &mut self.rows
    }

    /// Appends a row, e.g. to test monotonicity of infeasibility.
    pub fn push_row(&mut self, row: Row) {
        self.rows.push(row);
    }

    /// Text in the CPLEX LP interchange format.
    pub fn to_cplex_lp(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ n={} k={} |A+|={} |A-|={}", self.n, self.k, self.aplus.len(), self.aminus.len());
        out.push_str("Minimize\n obj: x1\nSubject To\n");
        let mut counters = [0usize; 4];
        for row in &self.rows {
            let (prefix, idx) = match row.kind {
                RowKind::Total => ("total", 0),
                RowKind::Order => ("ord", 1),
                RowKind::Nonneg => ("pos", 2),
                RowKind::Neg => ("neg", 3),
            };
            counters[idx] += 1;
            let _ = write!(out, " {prefix}{}:", counters[idx]);
            for (j, &(v, c)) in row.terms.iter().enumerate() {
                let sign = if c < 0 { "-" } else if j > 0 { "+" } else { "" };
                let _ = write!(out, " {sign}{}x{}", if c.abs() == 1 { String::new() } else { format!("{} ", c.abs()) }, v + 1);
            }
            let op = match row.sense {
                Sense::Ge => ">=",
                Sense::Le => "<=",
            };
            let _ = writeln!(out, " {op} {}", row.rhs);
        }
        out.push_str("Bounds\n");
        for i in 1..=self.n {
            let _ = writeln!(out, " x{i} free");
        }
        out.push_str("End\n");
        out
    }

    /// Rows in `a·x ≥ b` form.
    fn normalized(&self) -> Vec<(Vec<(u16, i8)>, i8)> {
        self.rows
            .iter()
            .map(|r| match r.sense {
                Sense::Ge => (r.terms.clone(), r.rhs),
                Sense::Le => (r.terms.iter().map(|&(v, c)| (v, -c)).collect(), -r.rhs),
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LpVerdict {
    Optimal,
    Infeasible,
}

/// Certified outcome of [`solve`].
///
/// `duals` (when optimal) and `certificate` (when infeasible) hold one
/// nonnegative multiplier per row, for rows rewritten in `≥` form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LpResult {
    pub verdict: LpVerdict,
    #[serde(serialize_with = "ser_opt_vec")]
    pub x: Option<Vec<BigRational>>,
    #[serde(serialize_with = "ser_opt")]
    pub objective: Option<BigRational>,
    #[serde(serialize_with = "ser_opt_vec")]
    pub duals: Option<Vec<BigRational>>,
    #[serde(serialize_with = "ser_opt_vec")]
    pub certificate: Option<Vec<BigRational>>,
    pub pivots: usize,
}

fn ser_opt<S: Serializer>(v: &Option<BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(q) => s.collect_str(q),
        None => s.serialize_none(),
    }
}

fn ser_opt_vec<S: Serializer>(v: &Option<Vec<BigRational>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(xs) => s.collect_seq(xs.iter().map(|q| q.to_string())),
        None => s.serialize_none(),
    }
}

impl LpResult {
    pub fn is_feasible(&self) -> bool {
        self.verdict == LpVerdict::Optimal
    }

    /// First 16 hex digits of SHA-256 over the nonzero certificate entries.
    pub fn certificate_digest(&self) -> Option<String> {
        self.certificate.as_ref().map(|c| multiplier_digest(c))
    }

    /// Canonical JSON text.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

/// Digest of a multiplier vector as used in proof logs.
pub fn multiplier_digest(c: &[BigRational]) -> String {
    let mut text = String::new();
    for (i, q) in c.iter().enumerate() {
        if !q.is_zero() {
            let _ = write!(text, "{i}:{q};");
        }
    }
    hex16(&Sha256::digest(text.as_bytes()))
}

pub(crate) fn hex16(bytes: &[u8]) -> String {
    bytes.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Integer arithmetic used by the fraction-free simplex.
trait Exact: Clone + std::fmt::Debug {
    fn from_i64(v: i64) -> Self;
    fn sign(&self) -> Ordering;
    fn add(&self, o: &Self) -> Option<Self>;
    fn sub(&self, o: &Self) -> Option<Self>;
    fn mul(&self, o: &Self) -> Option<Self>;
    fn div_exact(&self, o: &Self) -> Option<Self>;
    fn to_big(&self) -> BigInt;
}

impl Exact for i128 {
    fn from_i64(v: i64) -> Self {
        v as i128
    }
    fn sign(&self) -> Ordering {
        self.cmp(&0)
    }
    fn add(&self, o: &Self) -> Option<Self> {
        self.checked_add(*o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        self.checked_sub(*o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        self.checked_mul(*o)
    }
    fn div_exact(&self, o: &Self) -> Option<Self> {
        debug_assert_eq!(self % o, 0);
        self.checked_div(*o)
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
}

impl Exact for BigInt {
    fn from_i64(v: i64) -> Self {
        BigInt::from(v)
    }
    fn sign(&self) -> Ordering {
        self.cmp(&BigInt::zero())
    }
    fn add(&self, o: &Self) -> Option<Self> {
        Some(self + o)
    }
    fn sub(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn mul(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn div_exact(&self, o: &Self) -> Option<Self> {
        debug_assert!((self % o).is_zero());
        Some(self / o)
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
}

enum Raw {
    Optimal { x: Vec<BigInt>, y: Vec<(usize, BigInt)>, d: BigInt, pivots: usize },
    Infeasible { y: Vec<(usize, BigInt)>, pivots: usize },
}

/// Simplex on the dual `max bᵀy, Aᵀy = e_1, y ≥ 0` with a fraction-free
/// basis inverse `M = d·B⁻¹`. Returns `None` on overflow of `R`.
fn simplex<R: Exact>(rows: &[(Vec<(u16, i8)>, i8)], n: usize) -> Option<Raw> {
    let m = rows.len();
    let nn = n as i64;
    let mut basis: Vec<usize> = (0..n).collect();
    let mut in_basis = vec![false; m];
    in_basis[..n].iter_mut().for_each(|b| *b = true);
    // inverse of [1 | e_1-e_2 | ... | e_{n-1}-e_n] scaled by n
    let mut mat: Vec<Vec<R>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|c| if i == 0 { R::from_i64(1) } else { R::from_i64(if c < i { nn - i as i64 } else { -(i as i64) }) })
                .collect()
        })
        .collect();
    let mut d = R::from_i64(nn);
    let mut pivots = 0usize;
    let mut xv = vec![R::from_i64(0); n];
    let mut w = vec![R::from_i64(0); n];
    loop {
        // X = Mᵀ b_B
        for v in xv.iter_mut() {
            *v = R::from_i64(0);
        }
        for (i, &bi) in basis.iter().enumerate() {
            let b = rows[bi].1;
            if b != 0 {
                let bb = R::from_i64(b as i64);
                for c in 0..n {
                    xv[c] = xv[c].add(&mat[i][c].mul(&bb)?)?;
                }
            }
        }
        // Bland: lowest index with positive reduced cost d·b_j - a_j·X
        let mut entering = None;
        for j in 0..m {
            if in_basis[j] {
                continue;
            }
            let (terms, b) = &rows[j];
            let mut ax = R::from_i64(0);
            for &(v, c) in terms {
                ax = if c > 0 { ax.add(&xv[v as usize])? } else { ax.sub(&xv[v as usize])? };
            }
            let rc = d.mul(&R::from_i64(*b as i64))?.sub(&ax)?;
            if rc.sign() == Ordering::Greater {
                entering = Some(j);
                break;
            }
        }
        let Some(j) = entering else {
            let y = basis.iter().enumerate().map(|(i, &bi)| (bi, mat[i][0].to_big())).collect();
            let x = xv.iter().map(R::to_big).collect();
            return Some(Raw::Optimal { x, y, d: d.to_big(), pivots });
        };
        // W = M a_j
        for (i, wi) in w.iter_mut().enumerate() {
            let mut acc = R::from_i64(0);
            for &(v, c) in &rows[j].0 {
                acc = if c > 0 { acc.add(&mat[i][v as usize])? } else { acc.sub(&mat[i][v as usize])? };
            }
            *wi = acc;
        }
        // ratio test on Y = M e_1 over W_i > 0, ties to the lowest basic index
        let mut leave: Option<usize> = None;
        for i in 0..n {
            if w[i].sign() != Ordering::Greater {
                continue;
            }
            leave = match leave {
                None => Some(i),
                Some(l) => {
                    let lhs = mat[i][0].mul(&w[l])?;
                    let rhs = mat[l][0].mul(&w[i])?;
                    match lhs.sub(&rhs)?.sign() {
                        Ordering::Less => Some(i),
                        Ordering::Equal if basis[i] < basis[l] => Some(i),
                        _ => Some(l),
                    }
                }
            };
        }
        let Some(r) = leave else {
            let mut y: Vec<(usize, BigInt)> = vec![(j, d.to_big())];
            for (i, &bi) in basis.iter().enumerate() {
                if w[i].sign() != Ordering::Equal {
                    y.push((bi, -w[i].to_big()));
                }
            }
            return Some(Raw::Infeasible { y, pivots });
        };
        let wr = w[r].clone();
        for i in 0..n {
            if i == r {
                continue;
            }
            for c in 0..n {
                let v = wr.mul(&mat[i][c])?.sub(&w[i].mul(&mat[r][c])?)?;
                mat[i][c] = v.div_exact(&d)?;
            }
        }
        d = wr;
        in_basis[basis[r]] = false;
        in_basis[j] = true;
        basis[r] = j;
        pivots += 1;
    }
}

/// Solves the program exactly and checks the result before returning it.
pub fn solve(inst: &LpInstance) -> Result<LpResult> {
    let n = inst.n;
    let rows = inst.normalized();
    for (i, (terms, b)) in rows.iter().take(n).enumerate() {
        let expected: Vec<(u16, i8)> = if i == 0 {
            (0..n as u16).map(|v| (v, 1)).collect()
        } else {
            vec![(i as u16 - 1, 1), (i as u16, -1)]
        };
        if *terms != expected || *b != 0 {
            return Err(Error::LpFault("leading rows must be the total and ordering constraints".into()));
        }
    }
    if rows.iter().flat_map(|r| &r.0).any(|&(_, c)| c != 1 && c != -1) {
        return Err(Error::LpFault("coefficients must be +1 or -1".into()));
    }
    let raw = match simplex::<i128>(&rows, n) {
        Some(r) => r,
        None => simplex::<BigInt>(&rows, n).expect("arbitrary precision cannot overflow"),
    };
    let m = rows.len();
    let result = match raw {
        Raw::Optimal { x, y, d, pivots } => {
            let x: Vec<BigRational> = x.into_iter().map(|v| BigRational::new(v, d.clone())).collect();
            let mut duals = vec![BigRational::zero(); m];
            for (i, v) in y {
                duals[i] = BigRational::new(v, d.clone());
            }
            LpResult {
                verdict: LpVerdict::Optimal,
                objective: Some(x[0].clone()),
                x: Some(x),
                duals: Some(duals),
                certificate: None,
                pivots,
            }
        }
        Raw::Infeasible { y, pivots } => {
            let g = y.iter().fold(BigInt::zero(), |g, (_, v)| g.gcd(v));
            let mut cert = vec![BigRational::zero(); m];
            for (i, v) in y {
                cert[i] = BigRational::from_integer(v / &g);
            }
            LpResult {
                verdict: LpVerdict::Infeasible,
                x: None,
                objective: None,
                duals: None,
                certificate: Some(cert),
                pivots,
            }
        }
    };
    if !verify_certificate(inst, &result) {
        return Err(Error::LpFault("solver result failed independent verification".into()));
    }
    Ok(result)
}

/// Rechecks a result from scratch.
///
/// Optimal: `x` satisfies every row, the duals are nonnegative, combine the
/// rows into `e_1` and match the objective. Infeasible: the multipliers are
/// nonnegative, cancel every variable and leave a positive right-hand side.
pub fn verify_certificate(inst: &LpInstance, res: &LpResult) -> bool {
    let n = inst.n;
    let combine = |y: &[BigRational]| -> Option<(Vec<BigRational>, BigRational)> {
        if y.len() != inst.rows.len() || y.iter().any(|v| v.is_negative()) {
            return None;
        }
        let mut coef = vec![BigRational::zero(); n];
        let mut rhs = BigRational::zero();
        for (row, yi) in inst.rows.iter().zip(y) {
            if yi.is_zero() {
                continue;
            }
            let s: i64 = match row.sense {
                Sense::Ge => 1,
                Sense::Le => -1,
            };
            for &(v, c) in &row.terms {
                coef[v as usize] += yi * BigRational::from_integer((s * c as i64).into());
            }
            rhs += yi * BigRational::from_integer((s * row.rhs as i64).into());
        }
        Some((coef, rhs))
    };
    match res.verdict {
        LpVerdict::Optimal => {
            let (Some(x), Some(obj), Some(y)) = (&res.x, &res.objective, &res.duals) else {
                return false;
            };
            if x.len() != n || *obj != x[0] || !inst.rows.iter().all(|r| r.holds(x)) {
                return false;
            }
            let Some((coef, rhs)) = combine(y) else {
                return false;
            };
            coef.iter().enumerate().all(|(i, c)| if i == 0 { c.is_one() } else { c.is_zero() }) && rhs == *obj
        }
        LpVerdict::Infeasible => {
            let Some(y) = &res.certificate else {
                return false;
            };
            match combine(y) {
                Some((coef, rhs)) => coef.iter().all(Zero::is_zero) && rhs.is_positive(),
                None => false,
            }
        }
    }
}

/// `s_k(x)`: the number of k-subsets with nonnegative sum.
///
/// Sorting is done internally, so any order of `x` is accepted.
pub fn count_nonneg_ksums(x: &[BigRational], k: usize) -> u64 {
    let n = x.len();
    if k > n {
        return 0;
    }
    if k == 0 {
        return 1;
    }
    let lcm = x.iter().fold(BigInt::one(), |l, q| l.lcm(q.denom()));
    let mut ints: Vec<BigInt> = x.iter().map(|q| q.numer() * (&lcm / q.denom())).collect();
    ints.sort_unstable_by(|a, b| b.cmp(a));
    let bound = ints.iter().map(|v| v.abs()).max().unwrap_or_default() * BigInt::from(n as u64 + 1);
    match bound.to_i128() {
        Some(_) => {
            let small: Vec<i128> = ints.iter().map(|v| v.to_i128().unwrap()).collect();
            count_sorted(&small, k)
        }
        None => count_sorted(&ints, k),
    }
}

fn count_sorted<T>(v: &[T], k: usize) -> u64
where
    T: Clone + Ord + Zero + for<'a> std::ops::Add<&'a T, Output = T> + for<'a> std::ops::Sub<&'a T, Output = T>,
{
    let mut prefix = vec![T::zero()];
    for e in v {
        let last = prefix.last().unwrap().clone();
        prefix.push(last + e);
    }
    count_rec(v, &prefix, 0, k, T::zero())
}

fn count_rec<T>(v: &[T], prefix: &[T], start: usize, left: usize, partial: T) -> u64
where
    T: Clone + Ord + Zero + for<'a> std::ops::Add<&'a T, Output = T> + for<'a> std::ops::Sub<&'a T, Output = T>,
{
    let n = v.len();
    if left == 0 {
        return u64::from(partial >= T::zero());
    }
    // sums of the largest and of the smallest `left` remaining entries
    let hi = partial.clone() + &prefix[start + left] - &prefix[start];
    if hi < T::zero() {
        return 0;
    }
    let lo = partial.clone() + &prefix[n] - &prefix[n - left];
    if lo >= T::zero() {
        return binomial((n - start) as u64, left as u64).expect("count overflow");
    }
    (start..=n - left)
        .map(|i| count_rec(v, prefix, i + 1, left - 1, partial.clone() + &v[i]))
        .sum()
}
