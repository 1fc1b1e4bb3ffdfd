mod common;

use common::{all_ksets, left_of, set};
use mms_core::poset::{
    colex_rank, colex_successor, colex_unrank, cover_neighbors, join, lex_rank, lex_successor, meet, shift_leq,
    to_composition, Composition, Direction, KSet,
};
use mms_core::universe::Universe;
use mms_core::Error;
use proptest::prelude::*;

fn small_cases() -> impl Iterator<Item = (usize, usize)> {
    (1..=8).flat_map(|n| (1..=4.min(n)).map(move |k| (n, k)))
}

#[test]
fn shift_order_is_a_partial_order() {
    for (n, k) in small_cases() {
        let sets = all_ksets(n, k);
        for a in &sets {
            assert!(shift_leq(a, a).unwrap());
            for b in &sets {
                let ab = shift_leq(a, b).unwrap();
                assert_eq!(ab, left_of(a, b));
                if ab && shift_leq(b, a).unwrap() {
                    assert_eq!(a, b);
                }
            }
        }
    }
}

#[test]
fn transitivity_exhaustive_small() {
    for (n, k) in [(6, 3), (7, 2), (7, 3)] {
        let sets = all_ksets(n, k);
        for a in &sets {
            for b in sets.iter().filter(|b| shift_leq(a, b).unwrap()) {
                for c in sets.iter().filter(|c| shift_leq(b, c).unwrap()) {
                    assert!(shift_leq(a, c).unwrap());
                }
            }
        }
    }
}

#[test]
fn join_and_meet_are_bounds() {
    for (n, k) in small_cases() {
        let sets = all_ksets(n, k);
        for a in &sets {
            for b in &sets {
                let j = join(&[a.clone(), b.clone()]).unwrap();
                let m = meet(&[a.clone(), b.clone()]).unwrap();
                assert!(left_of(&j, a) && left_of(&j, b));
                assert!(left_of(a, &m) && left_of(b, &m));
                // least upper and greatest lower bounds
                for c in &sets {
                    if left_of(c, a) && left_of(c, b) {
                        assert!(left_of(c, &j));
                    }
                    if left_of(a, c) && left_of(b, c) {
                        assert!(left_of(&m, c));
                    }
                }
                assert_eq!(j, join(&[b.clone(), a.clone()]).unwrap());
                assert_eq!(a.clone(), join(&[a.clone(), meet(&[a.clone(), b.clone()]).unwrap()]).unwrap());
            }
        }
    }
}

#[test]
fn join_meet_errors() {
    assert!(matches!(join(&[]), Err(Error::EmptyFamily)));
    assert!(matches!(meet(&[set(&[1, 2]), set(&[1, 2, 3])]), Err(Error::CardinalityMismatch { .. })));
    assert!(shift_leq(&set(&[1]), &set(&[1, 2])).is_err());
}

#[test]
fn ranks_are_monotone_along_the_order() {
    for (n, k) in small_cases() {
        let sets = all_ksets(n, k);
        for a in &sets {
            for b in &sets {
                if left_of(a, b) {
                    assert!(colex_rank(a) <= colex_rank(b), "{a} {b}");
                    assert!(lex_rank(a, n) <= lex_rank(b, n), "{a} {b}");
                }
            }
        }
    }
}

#[test]
fn lex_and_colex_enumerations() {
    for (n, k) in small_cases() {
        let lex = all_ksets(n, k);
        for (i, s) in lex.iter().enumerate() {
            assert_eq!(lex_rank(s, n), i as u64);
            assert_eq!(lex_successor(s, n).as_ref(), lex.get(i + 1));
        }
        let mut colex = lex.clone();
        colex.sort_by_key(|s| s.elements().iter().rev().copied().collect::<Vec<_>>());
        for (i, s) in colex.iter().enumerate() {
            assert_eq!(colex_rank(s), i as u64);
            assert_eq!(&colex_unrank(i as u64, n, k).unwrap(), s);
            assert_eq!(colex_successor(s, n).as_ref(), colex.get(i + 1));
        }
        assert!(matches!(colex_unrank(colex.len() as u64, n, k), Err(Error::RankOutOfRange { .. })));
        let mut sorted = lex.clone();
        sorted.sort();
        assert_eq!(sorted, colex, "Ord is colex");
    }
}

#[test]
fn covers_are_exactly_the_hasse_edges() {
    for (n, k) in small_cases() {
        let sets = all_ksets(n, k);
        for a in &sets {
            let left = cover_neighbors(a, n, Direction::Left);
            let right = cover_neighbors(a, n, Direction::Right);
            for b in &sets {
                let strictly = |x: &KSet, y: &KSet| x != y && left_of(x, y);
                let covers = strictly(b, a) && !sets.iter().any(|c| strictly(b, c) && strictly(c, a));
                assert_eq!(left.contains(b), covers, "{a} left {b}");
                let covered = strictly(a, b) && !sets.iter().any(|c| strictly(a, c) && strictly(c, b));
                assert_eq!(right.contains(b), covered, "{a} right {b}");
            }
        }
    }
}

#[test]
fn universe_agrees_with_free_functions() {
    for (n, k) in small_cases() {
        let u = Universe::new(n, k).unwrap();
        assert_eq!(u.size(), all_ksets(n, k).len());
        for r in 0..u.size() as u32 {
            let s = u.kset(r);
            assert_eq!(colex_rank(&s), r as u64);
            assert_eq!(u.rank(&s).unwrap(), r);
            let mut mine = Vec::new();
            u.for_each_left_cover(r, |_, t| mine.push(u.kset(t)));
            mine.sort();
            let mut theirs = cover_neighbors(&s, n, Direction::Left);
            theirs.sort();
            assert_eq!(mine, theirs);
            let mut mine = Vec::new();
            u.for_each_right_cover(r, |_, t| mine.push(u.kset(t)));
            mine.sort();
            let mut theirs = cover_neighbors(&s, n, Direction::Right);
            theirs.sort();
            assert_eq!(mine, theirs);
        }
        let lex: Vec<KSet> = u.lex_order().iter().map(|&r| u.kset(r)).collect();
        assert_eq!(lex, all_ksets(n, k));
    }
}

#[test]
fn join_ranks_match() {
    let u = Universe::new(8, 4).unwrap();
    for a in 0..u.size() as u32 {
        for b in 0..u.size() as u32 {
            let j = join(&[u.kset(a), u.kset(b)]).unwrap();
            let m = meet(&[u.kset(a), u.kset(b)]).unwrap();
            assert_eq!(u.kset(u.join_ranks(a, b)), j);
            assert_eq!(u.kset(u.meet_ranks(a, b)), m);
        }
    }
}

#[test]
fn compositions_follow_dominance() {
    for (n, k) in small_cases() {
        let sets = all_ksets(n, k);
        for a in &sets {
            let ca = to_composition(a, n);
            assert_eq!(ca.n(), n);
            assert_eq!(ca.to_kset(), *a);
            for b in &sets {
                assert_eq!(ca.dominated_by(&to_composition(b, n)), left_of(a, b), "{a} {b}");
            }
        }
    }
    assert!(Composition::new(vec![0, 1]).is_err());
}

#[test]
fn kset_parsing_and_validation() {
    let s: KSet = "{1,6,11}".parse().unwrap();
    assert_eq!(s.elements(), &[1, 6, 11]);
    assert_eq!(s.to_string(), "{1,6,11}");
    assert!("{3,2}".parse::<KSet>().is_err());
    assert!(KSet::new(&[0, 1]).is_err());
    assert!(KSet::new(&[2, 2]).is_err());
    assert!(KSet::new_in(&[1, 9], 8).is_err());
    assert_eq!(KSet::first(3), set(&[1, 2, 3]));
    assert_eq!(KSet::last(11, 3), set(&[9, 10, 11]));
    assert_eq!(set(&[1, 6, 11]).reflect(11), set(&[1, 6, 11]));
    assert_eq!(set(&[1, 2, 3]).reflect(11), set(&[9, 10, 11]));
    let json = serde_json::to_string(&s).unwrap();
    assert_eq!(json, "\"{1,6,11}\"");
    assert_eq!(serde_json::from_str::<KSet>(&json).unwrap(), s);
}

proptest! {
    #[test]
    fn unrank_rank_roundtrip(n in 1usize..40, k in 1usize..6, seed in any::<u64>()) {
        prop_assume!(k <= n);
        let total = mms_core::binom::binomial(n as u64, k as u64).unwrap();
        let r = seed % total;
        let s = colex_unrank(r, n, k).unwrap();
        prop_assert_eq!(colex_rank(&s), r);
        prop_assert_eq!(s.reflect(n).reflect(n), s.clone());
        // reflection reverses the order
        let t = colex_unrank(seed.rotate_left(17) % total, n, k).unwrap();
        prop_assert_eq!(left_of(&s, &t), left_of(&t.reflect(n), &s.reflect(n)));
    }
}
