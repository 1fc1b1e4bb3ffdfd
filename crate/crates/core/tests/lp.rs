mod common;

use common::{all_ksets, brute_sk, q, qs, set};
use mms_core::lp::{build_lp, count_nonneg_ksums, solve, verify_certificate, LpVerdict, Row, RowKind, Sense};
use mms_core::poset::KSet;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_families(n: usize, k: usize, rng: &mut ChaCha8Rng) -> (Vec<KSet>, Vec<KSet>) {
    let sets = all_ksets(n, k);
    let mut pick = || {
        let count = rng.random_range(0..8);
        (0..count).map(|_| sets[rng.random_range(0..sets.len())].clone()).collect::<Vec<_>>()
    };
    let p = pick();
    let m = pick();
    (p, m)
}

#[test]
fn empty_families_give_zero() {
    for (n, k) in [(5, 2), (9, 4), (17, 5)] {
        let inst = build_lp(n, k, &[], &[]).unwrap();
        let res = solve(&inst).unwrap();
        assert_eq!(res.verdict, LpVerdict::Optimal);
        assert_eq!(res.objective, Some(q(0)));
        assert!(verify_certificate(&inst, &res));
    }
}

#[test]
fn every_verdict_verifies() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut seen = [0usize; 2];
    for _ in 0..400 {
        let n = rng.random_range(3..12);
        let k = rng.random_range(1..n.min(5));
        let (p, m) = random_families(n, k, &mut rng);
        let inst = build_lp(n, k, &p, &m).unwrap();
        let res = solve(&inst).unwrap();
        assert!(verify_certificate(&inst, &res));
        match res.verdict {
            LpVerdict::Optimal => {
                seen[0] += 1;
                let x = res.x.as_ref().unwrap();
                assert!(x.windows(2).all(|w| w[0] >= w[1]));
                assert!(x.iter().sum::<BigRational>() >= q(0));
                for s in &p {
                    assert!(s.sum_of(x) >= q(0));
                }
                for s in &m {
                    assert!(s.sum_of(x) <= q(-1));
                }
            }
            LpVerdict::Infeasible => seen[1] += 1,
        }
    }
    assert!(seen[0] > 20 && seen[1] > 20, "{seen:?}");
}

#[test]
fn tampered_results_fail_verification() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    while checked < 60 {
        let n = rng.random_range(4..10);
        let k = rng.random_range(2..n.min(5));
        let (p, m) = random_families(n, k, &mut rng);
        let inst = build_lp(n, k, &p, &m).unwrap();
        let res = solve(&inst).unwrap();
        let mut bad = res.clone();
        match res.verdict {
            LpVerdict::Infeasible => {
                let c = bad.certificate.as_mut().unwrap();
                let i = c.iter().position(|v| !v.is_zero()).unwrap();
                c[i] += BigRational::one();
                assert!(!verify_certificate(&inst, &bad));
                let mut neg = res.clone();
                neg.certificate.as_mut().unwrap()[i] = q(-1);
                assert!(!verify_certificate(&inst, &neg));
            }
            LpVerdict::Optimal => {
                bad.objective = Some(bad.objective.clone().unwrap() + q(1));
                assert!(!verify_certificate(&inst, &bad));
                let mut off = res.clone();
                off.x.as_mut().unwrap()[n - 1] += q(7);
                assert!(!verify_certificate(&inst, &off));
                let mut flip = res.clone();
                flip.verdict = LpVerdict::Infeasible;
                assert!(!verify_certificate(&inst, &flip));
            }
        }
        checked += 1;
    }
}

#[test]
fn adding_constraints_keeps_infeasibility() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut found = 0;
    for _ in 0..300 {
        let n = rng.random_range(4..10);
        let k = rng.random_range(2..n.min(5));
        let (p, m) = random_families(n, k, &mut rng);
        let inst = build_lp(n, k, &p, &m).unwrap();
        let base = solve(&inst).unwrap();
        let (p2, m2) = random_families(n, k, &mut rng);
        let bigger = build_lp(n, k, &[p.clone(), p2].concat(), &[m.clone(), m2].concat()).unwrap();
        let more = solve(&bigger).unwrap();
        if base.verdict == LpVerdict::Infeasible {
            found += 1;
            assert_eq!(more.verdict, LpVerdict::Infeasible);
        }
        if let (Some(a), Some(b)) = (&base.objective, &more.objective) {
            assert!(b >= a, "objective can only grow");
        }
    }
    assert!(found > 10);
}

#[test]
fn classic_small_programs() {
    // objective is x1 at the optimum (1, 0, -1)
    let inst = build_lp(3, 2, &[], &[set(&[2, 3])]).unwrap();
    let res = solve(&inst).unwrap();
    assert_eq!(res.objective, Some(q(1)));
    // the only negative pair being {1,2} contradicts ordering
    let inst = build_lp(3, 2, &[], &[set(&[1, 2])]).unwrap();
    assert_eq!(solve(&inst).unwrap().verdict, LpVerdict::Infeasible);
    // {1,3} >= 0 together with {1,2} <= -1 contradicts x2 >= x3
    let inst = build_lp(3, 2, &[set(&[1, 3])], &[set(&[1, 2])]).unwrap();
    let res = solve(&inst).unwrap();
    assert_eq!(res.verdict, LpVerdict::Infeasible);
    assert!(res.certificate_digest().unwrap().len() == 16);
}

#[test]
fn deduplication_and_validation() {
    let a = build_lp(5, 2, &[set(&[1, 5]), set(&[1, 5])], &[set(&[2, 3])]).unwrap();
    assert_eq!(a.aplus().len(), 1);
    assert!(build_lp(5, 2, &[set(&[1, 2, 3])], &[]).is_err());
    assert!(build_lp(5, 2, &[set(&[1, 6])], &[]).is_err());
    assert!(build_lp(2, 3, &[], &[]).is_err());
    let mut broken = build_lp(4, 2, &[], &[]).unwrap();
    broken.rows_mut()[1] = Row { kind: RowKind::Order, terms: vec![(0, 1), (2, -1)], sense: Sense::Ge, rhs: 0 };
    assert!(solve(&broken).is_err());
    let text = a.to_cplex_lp();
    assert!(text.contains("Minimize") && text.contains("x1"));
}

#[test]
fn large_coefficients_use_exact_fallback() {
    let n = 45;
    let k = 20;
    let neg: Vec<KSet> = (0..15u8).map(|s| KSet::new(&(1 + s..=20 + s).collect::<Vec<_>>()).unwrap()).collect();
    let pos: Vec<KSet> = (0..15u8).map(|s| KSet::new(&[(1..=10).collect::<Vec<u8>>(), (21 + s..=30 + s).collect()].concat()).unwrap()).collect();
    let inst = build_lp(n, k, &pos, &neg).unwrap();
    let res = solve(&inst).unwrap();
    assert!(verify_certificate(&inst, &res));
}

#[test]
fn count_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..300 {
        let n = rng.random_range(1..12);
        let k = rng.random_range(1..=n);
        let x: Vec<BigRational> = (0..n).map(|_| BigRational::new(BigInt::from(rng.random_range(-9i64..10)), BigInt::from(rng.random_range(1i64..4)))).collect();
        assert_eq!(count_nonneg_ksums(&x, k), brute_sk(&x, k));
    }
    assert_eq!(count_nonneg_ksums(&qs(&[10, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1]), 3), 45);
    assert_eq!(count_nonneg_ksums(&qs(&[2, 2, 2, 2, 2, 2, 2, -7, -7]), 4), 35);
}

proptest! {
    #[test]
    fn scaling_preserves_counts(v in proptest::collection::vec(-50i64..50, 1..10), c in 1i64..1000, k in 1usize..5) {
        prop_assume!(k <= v.len());
        let x = qs(&v);
        let y: Vec<BigRational> = x.iter().map(|a| a * q(c)).collect();
        prop_assert_eq!(count_nonneg_ksums(&x, k), count_nonneg_ksums(&y, k));
        let mut z = x.clone();
        z.reverse();
        prop_assert_eq!(count_nonneg_ksums(&x, k), count_nonneg_ksums(&z, k));
    }
}
