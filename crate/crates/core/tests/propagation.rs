mod common;

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Duration;

use common::{all_ksets, reference_proof, set, ReferenceProof};
use mms_core::counts::{FamilyState, Strategy};
use mms_core::lp::LpVerdict;
use mms_core::poset::KSet;
use mms_core::prooflog::{Dir, Event, Rule};
use mms_core::propagation::{
    forced_negative, node_rng, propagate_negative, propagate_positive, stochastic_propagation, tail_set, GTable,
    LpStats, NegativeRules, PropOutcome, PropagationConfig, Provenance,
};
use mms_core::universe::Universe;
use rand::Rng;

fn root_state(n: usize, k: usize) -> FamilyState {
    FamilyState::new(Arc::new(Universe::new(n, k).unwrap()), Strategy::Auto)
}

fn root_run(n: usize, k: usize, t: u64) -> (Vec<Event>, PropOutcome, FamilyState) {
    let mut state = root_state(n, k);
    let rules = NegativeRules::new(n, k, t, &GTable::default(), false);
    let mut events = Vec::new();
    let mut stats = LpStats::default();
    let (out, _) = propagate_positive(&mut state, &rules, 1, &mut events, &mut stats).unwrap();
    (events, out, state)
}

fn round_sets(events: &[Event], r: u32, d: Dir) -> BTreeSet<KSet> {
    events
        .iter()
        .filter_map(|e| match e {
            Event::Round { round, dir, set, .. } if *round == r && *dir == d => Some(set.clone()),
            _ => None,
        })
        .collect()
}

fn counts(events: &[Event]) -> Vec<u64> {
    events.iter().filter_map(|e| if let Event::Count { pos } = e { Some(*pos) } else { None }).collect()
}

fn check_reference(p: &ReferenceProof, upto: usize) {
    let (events, out, _) = root_run(p.n, p.k, p.t);
    for (round, neg, sets) in p.blocks.iter().take(upto) {
        let d = if *neg { Dir::Neg } else { Dir::Pos };
        let expected: BTreeSet<KSet> = sets.iter().cloned().collect();
        assert_eq!(round_sets(&events, *round, d), expected, "({},{}) round {round} {d:?}", p.n, p.k);
    }
    if upto == p.blocks.len() {
        let ours = counts(&events);
        assert_eq!(&ours[..p.counts.len()], &p.counts[..]);
        match out {
            PropOutcome::Infeasible(res) => {
                assert!(p.ends_infeasible);
                assert_eq!(res.verdict, LpVerdict::Infeasible);
            }
            PropOutcome::Threshold => {
                assert!(!p.ends_infeasible);
                assert!(*ours.last().unwrap() >= p.t);
            }
            PropOutcome::Stable => panic!("reference proof closes the root"),
        }
    }
}

#[test]
fn three_element_references() {
    for n in [11, 13] {
        let p = reference_proof(n, 3);
        check_reference(&p, p.blocks.len());
    }
}

#[test]
fn four_element_references() {
    for n in [14, 17] {
        let p = reference_proof(n, 4);
        check_reference(&p, p.blocks.len());
    }
}

#[test]
fn fifteen_four_first_round() {
    let p = reference_proof(15, 4);
    check_reference(&p, 2);
    let (events, _, _) = root_run(15, 4, 364);
    assert_eq!(counts(&events)[0], p.counts[0]);
}

#[test]
fn negative_sets_are_tagged_with_counting_rules() {
    let (events, _, _) = root_run(14, 4, 286);
    for e in &events {
        if let Event::Round { dir, rule, cert, .. } = e {
            match dir {
                Dir::Neg => assert!(matches!(rule, Rule::LeftShift | Rule::TailBound | Rule::UnionCount) && cert.is_none()),
                Dir::Pos => assert!(*rule == Rule::LpNegProbe && cert.is_some()),
            }
        }
    }
}

#[test]
fn forced_negative_examples() {
    let g = GTable::default();
    assert!(forced_negative(&set(&[1, 6, 11]), 11, 3, 45, &g));
    assert!(!forced_negative(&set(&[1, 2, 3]), 11, 3, 45, &g));
    assert!(forced_negative(&set(&[9, 10, 11]), 11, 3, 45, &g));
    assert!(!forced_negative(&set(&[1, 2, 11]), 11, 3, 45, &g));
}

#[test]
fn forced_negative_is_upward_closed() {
    let g = GTable::default();
    for (n, k, t) in [(9, 3, 28), (10, 4, 84), (11, 3, 45)] {
        let sets = all_ksets(n, k);
        for a in &sets {
            if !forced_negative(a, n, k, t, &g) {
                continue;
            }
            for b in &sets {
                if common::left_of(a, b) {
                    assert!(forced_negative(b, n, k, t, &g), "{a} forced but {b} not");
                }
            }
        }
    }
}

#[test]
fn propagate_negative_marks_only_forced_sets() {
    let n = 12;
    let k = 4;
    let t = 165;
    let mut state = root_state(n, k);
    let rules = NegativeRules::new(n, k, t, &GTable::default(), false);
    let mut events = Vec::new();
    let added = propagate_negative(&mut state, &rules, 1, &mut events);
    assert_eq!(added.len(), events.len());
    let u = state.universe().clone();
    for &r in &added {
        assert!(forced_negative(&u.kset(r), n, k, t, &GTable::default()));
    }
    let again = propagate_negative(&mut state, &rules, 2, &mut Vec::new());
    assert!(again.is_empty());
}

#[test]
fn tail_rule_needs_the_cap() {
    let g = GTable::default();
    assert!(NegativeRules::new(11, 3, 45, &g, false).tail > 0);
    assert_eq!(NegativeRules::new(11, 3, 46, &g, false).tail, 0);
    assert!(NegativeRules::new(11, 3, 46, &g, true).tail > 0);
}

#[test]
fn gtable_behaviour() {
    let mut g = GTable::new();
    assert_eq!(g.get(12, 4), (165, Provenance::Baranyai));
    assert_eq!(g.get(13, 4), (0, Provenance::Absent));
    assert_eq!(g.lower_bound(15, 4), 165);
    assert_eq!(g.lower_bound(3, 4), 0);
    g.insert(14, 4, 286, Provenance::Computed).unwrap();
    assert_eq!(g.lower_bound(15, 4), 286);
    assert_eq!(g.lower_bound(13, 4), 165);
    assert!(g.insert(13, 4, 300, Provenance::Computed).is_err());
    assert!(g.insert(15, 4, 200, Provenance::Computed).is_err());
    assert!(g.insert(13, 4, 100, Provenance::Baranyai).is_err());
    g.insert(16, 4, 455, Provenance::Baranyai).unwrap();
    let back = GTable::from_entries(&g.entries()).unwrap();
    assert_eq!(back, g);
    let json = serde_json::to_string(&g).unwrap();
    assert_eq!(serde_json::from_str::<GTable>(&json).unwrap(), g);
}

#[test]
fn tail_sets() {
    assert_eq!(tail_set(11, 3), set(&[1, 10, 11]));
    assert_eq!(tail_set(14, 4), set(&[1, 12, 13, 14]));
    assert_eq!(tail_set(5, 1), set(&[1]));
}

#[test]
fn node_rng_is_deterministic_per_path() {
    let draw = |seed, path: &str| {
        let mut r = node_rng(seed, path);
        (0..8).map(|_| r.random::<u64>()).collect::<Vec<_>>()
    };
    assert_eq!(draw(7, "0110"), draw(7, "0110"));
    assert_ne!(draw(7, "0110"), draw(7, "0111"));
    assert_ne!(draw(7, ""), draw(8, ""));
}

#[test]
fn stochastic_propagation_repeats_under_a_seed() {
    let run = |seed: u64| {
        let n = 12;
        let k = 4;
        let mut state = root_state(n, k);
        let rules = NegativeRules::new(n, k, 165, &GTable::default(), false);
        let config = PropagationConfig {
            sample_limit: 30,
            time_limit: Duration::from_secs(600),
            rng_seed: seed,
            enable_after_branch_depth: 0,
        };
        let mut rng = node_rng(seed, "");
        let mut events = Vec::new();
        let mut stats = LpStats::default();
        stochastic_propagation(&mut state, &rules, &config, &mut rng, 1, &mut events, &mut stats).unwrap();
        (events, state.aplus().to_vec(), state.aminus().to_vec())
    };
    let a = run(3);
    assert_eq!(a, run(3));
    assert!(!a.1.is_empty());
}

#[test]
fn positive_probes_only_add_sound_sets() {
    let (_, out, state) = root_run(12, 4, 166);
    assert!(matches!(out, PropOutcome::Stable));
    let u = state.universe().clone();
    let x = common::qs(&[11, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1, -1]);
    for &r in state.aplus() {
        assert!(u.kset(r).sum_of(&x) >= common::q(0));
    }
    for &r in state.aminus() {
        assert!(u.kset(r).sum_of(&x) < common::q(0));
    }
}
