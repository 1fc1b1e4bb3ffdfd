#![allow(dead_code)]

use mms_core::poset::KSet;
use num_bigint::BigInt;
use num_rational::BigRational;

/// All k-subsets of [n] in lexicographic order, built without the library.
pub fn all_ksets(n: usize, k: usize) -> Vec<KSet> {
    fn rec(start: u8, n: u8, k: usize, cur: &mut Vec<u8>, out: &mut Vec<KSet>) {
        if cur.len() == k {
            out.push(KSet::new(cur).unwrap());
            return;
        }
        for e in start..=n {
            cur.push(e);
            rec(e + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(1, n as u8, k, &mut Vec::new(), &mut out);
    out
}

/// Positionwise comparison: `s` lies left of `t`.
pub fn left_of(s: &KSet, t: &KSet) -> bool {
    s.elements().iter().zip(t.elements()).all(|(a, b)| a <= b)
}

pub fn q(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn qs(v: &[i64]) -> Vec<BigRational> {
    v.iter().map(|&x| q(x)).collect()
}

/// Nonnegative k-sums by enumerating every subset.
pub fn brute_sk(x: &[BigRational], k: usize) -> u64 {
    all_ksets(x.len(), k).iter().filter(|s| s.elements().iter().map(|&e| &x[e as usize - 1]).sum::<BigRational>() >= q(0)).count() as u64
}

pub fn set(v: &[u8]) -> KSet {
    KSet::new(v).unwrap()
}

/// Sets printed in a block such as `{1,6,11} {1,8,10}`.
pub fn parse_sets(text: &str) -> Vec<KSet> {
    text.split_whitespace().map(|w| w.parse().unwrap()).collect()
}

/// One proof from `tests/data/reference_proofs.txt`.
#[derive(Debug, Default)]
pub struct ReferenceProof {
    pub n: usize,
    pub k: usize,
    pub t: u64,
    /// `(round, is_negative, sets)` in printed order.
    pub blocks: Vec<(u32, bool, Vec<KSet>)>,
    pub counts: Vec<u64>,
    pub ends_infeasible: bool,
}

pub fn reference_proofs() -> Vec<ReferenceProof> {
    let text = include_str!("../data/reference_proofs.txt");
    let mut out: Vec<ReferenceProof> = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let mut w = line.split_whitespace();
        match w.next().unwrap() {
            "case" => {
                let v: Vec<u64> = w.map(|x| x.parse().unwrap()).collect();
                out.push(ReferenceProof { n: v[0] as usize, k: v[1] as usize, t: v[2], ..Default::default() });
            }
            tag @ ("NEG" | "POS") => {
                let round = w.next().unwrap().parse().unwrap();
                let rest: Vec<&str> = w.collect();
                out.last_mut().unwrap().blocks.push((round, tag == "NEG", parse_sets(&rest.join(" "))));
            }
            "COUNT" => out.last_mut().unwrap().counts.push(w.next().unwrap().parse().unwrap()),
            "END" => out.last_mut().unwrap().ends_infeasible = w.next() == Some("INFEASIBLE"),
            other => panic!("bad fixture line {other}"),
        }
    }
    out
}

pub fn reference_proof(n: usize, k: usize) -> ReferenceProof {
    reference_proofs().into_iter().find(|p| p.n == n && p.k == k).unwrap()
}
