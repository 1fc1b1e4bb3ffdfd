mod common;

use common::{brute_sk, q, qs};
use mms_core::binom::binomial;
use mms_core::checkpoint::Checkpoint;
use mms_core::driver::{
    compute_f, compute_g, compute_g_strong, compute_nk, descriptor, nk_csv, resume, scan_two_value, two_value_s,
    two_value_vector, DriverOptions, QueryKind, RunResult, TableRow,
};
use mms_core::prooflog::{Outcome, ProofLog};
use mms_core::propagation::{tail_set, GTable, Mode, Provenance};
use mms_core::replay::replay;
use mms_core::search::SearchConfig;
use num_rational::BigRational;

fn opts(mode: Mode) -> DriverOptions {
    DriverOptions::new(SearchConfig::with_mode(mode))
}

#[test]
fn two_value_counts_match_enumeration() {
    for n in 2..=25u64 {
        for a in 1..n {
            let b = n - a;
            let x = two_value_vector(a, b);
            assert_eq!(x.iter().sum::<BigRational>(), q(0));
            for k in 1..=6.min(n) {
                if n <= 14 {
                    assert_eq!(two_value_s(a, b, k), brute_sk(&x, k as usize), "a={a} b={b} k={k}");
                } else {
                    assert_eq!(two_value_s(a, b, k), mms_core::lp::count_nonneg_ksums(&x, k as usize));
                }
            }
        }
    }
}

#[test]
fn two_value_identities() {
    for k in 2..=6u64 {
        for n in (3 * k + 1)..=25 {
            assert_eq!(two_value_s(n - 1, 1, k), binomial(n - 1, k - 1).unwrap());
            assert_eq!(two_value_s(3, n - 3, k), binomial(n - 3, k).unwrap(), "n={n} k={k}");
        }
    }
}

#[test]
fn scan_examples() {
    assert_eq!(scan_two_value(9, 4).unwrap(), (35, (2, 7)));
    assert_eq!(scan_two_value(11, 3).unwrap().0, 45);
    assert_eq!(scan_two_value(19, 5).unwrap(), (3060, (18, 1)));
    assert!(scan_two_value(3, 3).is_err());
    assert!(scan_two_value(5, 0).is_err());
    for n in 4..=20 {
        let (s, _) = scan_two_value(n, 3).unwrap();
        assert!(s <= binomial(n - 1, 2).unwrap());
    }
}

#[test]
fn nk_values() {
    let got: Vec<u64> = (2..=10).map(|k| compute_nk(k).unwrap()).collect();
    assert_eq!(got, vec![7, 11, 14, 17, 20, 23, 26, 29, 33]);
    let start = std::time::Instant::now();
    let n250 = compute_nk(250).unwrap();
    assert!((n250 as f64 / 250.0 - 3.147899).abs() <= 0.01, "{n250}");
    let mut prev = 0;
    for k in 2..=250 {
        let n = compute_nk(k).unwrap();
        assert!(n > prev);
        assert!(binomial(n - 3, k).is_none() || binomial(n - 3, k) >= binomial(n - 1, k - 1));
        prev = n;
    }
    assert!(start.elapsed().as_secs_f64() < 5.0);
    assert!(compute_nk(1).is_err());
    let csv = nk_csv(2..=4).unwrap();
    assert_eq!(csv.lines().next(), Some("k,N_k,ratio"));
    assert!(csv.contains("4,14,3.500000"));
}

#[test]
fn descriptors() {
    assert_eq!(descriptor(&two_value_vector(3, 7)), "3^7 (-7)^3");
    assert_eq!(descriptor(&qs(&[10, -1, -1])), "10^1 (-1)^2");
    let half = vec![BigRational::new(1.into(), 2.into()), BigRational::new(1.into(), 2.into()), q(-1)];
    assert_eq!(descriptor(&half), "1^2 (-2)^1");
    assert_eq!(descriptor(&qs(&[4, 4, 0, -8])), "4^2 0^1 (-8)^1");
}

#[test]
fn g_values() {
    let g = GTable::default();
    for mode in [Mode::Negative, Mode::Positive] {
        let r = compute_g(13, 3, &g, &opts(mode)).unwrap();
        assert_eq!((r.value, r.verdict, r.deficiency), (Some(66), Outcome::Holds, Some(0)));
        let r = compute_g(11, 4, &g, &opts(mode)).unwrap();
        assert_eq!(r.value, Some(92));
        assert_eq!(r.deficiency, Some(120 - 92));
        assert_eq!(brute_sk(r.witness.as_ref().unwrap(), 4), 92);
        assert_eq!(r.provenance, Some(Provenance::Computed));
    }
}

#[test]
fn divisible_case_shortcut_and_cross_check() {
    let g = GTable::default();
    let r = compute_g(10, 5, &g, &opts(Mode::Negative)).unwrap();
    assert_eq!((r.value, r.provenance, r.nodes), (Some(126), Some(Provenance::Baranyai), 0));
    assert_eq!(r.example.as_deref(), Some("9^1 (-1)^9"));
    let mut o = opts(Mode::Negative);
    o.baranyai = false;
    for (n, k, v) in [(12, 4, 165), (9, 3, 28)] {
        let r = compute_g(n, k, &g, &o).unwrap();
        assert_eq!(r.value, Some(v));
        assert_eq!(r.provenance, Some(Provenance::Computed));
    }
}

#[test]
fn strong_values() {
    let g = GTable::default();
    let r = compute_g_strong(11, 3, &g, &opts(Mode::Positive)).unwrap();
    assert_eq!(r.value, Some(46));
    let x = r.witness.unwrap();
    assert!(tail_set(11, 3).sum_of(&x) < q(0));
    assert_eq!(brute_sk(&x, 3), 46);
    assert_eq!(compute_g_strong(12, 3, &g, &opts(Mode::Negative)).unwrap().value, Some(80));
}

#[test]
fn f_for_three() {
    let mut g = GTable::default();
    let r = compute_f(3, &mut g, &opts(Mode::Negative)).unwrap();
    assert_eq!(r.value, Some(11));
    let gs: Vec<u64> = r.rows.iter().map(|row| row.g).collect();
    assert_eq!(&gs[..10], &[1, 3, 10, 10, 16, 28, 35, 45, 55, 66]);
    assert_eq!(g.get(11, 3).0, 45);
    assert!(compute_f(1, &mut GTable::default(), &opts(Mode::Negative)).is_err());
}

#[test]
fn result_json_round_trip() {
    let g = GTable::default();
    let r = compute_g(11, 3, &g, &opts(Mode::Negative)).unwrap();
    let json = r.to_json();
    assert!(json.contains("\"value\": \"45\""));
    let back: RunResult = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
    let row = r.row().unwrap();
    assert_eq!(row.csv().split(',').take(4).collect::<Vec<_>>(), vec!["3", "11", "45", "0"]);
    assert_eq!(TableRow::CSV_HEADER.split(',').count(), 7);
    let empty = RunResult::summary(QueryKind::Nk, None, 4, 0);
    assert!(empty.row().is_none());
}

#[test]
fn logs_and_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("g.txt");
    let ck = dir.path().join("g.ck");
    let mut o = opts(Mode::Negative);
    o.log_path = Some(log.clone());
    o.checkpoint_path = Some(ck.clone());
    o.search.node_budget = Some(6);
    let g = GTable::default();
    let part = compute_g(13, 4, &g, &o).unwrap();
    assert_eq!(part.verdict, Outcome::Indeterminate);
    assert!(!part.is_determined());
    let saved = Checkpoint::load(&ck).unwrap();
    assert_eq!(saved.kind, QueryKind::G);
    let text = serde_json::to_string(&saved).unwrap();
    assert_eq!(serde_json::from_str::<Checkpoint>(&text).unwrap(), saved);

    o.search.node_budget = None;
    let done = resume(saved, &o).unwrap();
    assert_eq!(done.value, Some(210));
    let resumed = std::fs::read_to_string(&log).unwrap();

    let mut plain = opts(Mode::Negative);
    plain.log_path = Some(dir.path().join("plain.txt"));
    let full = compute_g(13, 4, &g, &plain).unwrap();
    assert_eq!(full.value, Some(210));
    assert_eq!(resumed, std::fs::read_to_string(dir.path().join("plain.txt")).unwrap());
    let parsed = ProofLog::parse(&resumed).unwrap();
    assert_eq!(replay(&parsed, Some(&g)).unwrap().result, Outcome::Holds);
    let json = std::fs::read_to_string(dir.path().join("plain.txt.json")).unwrap();
    assert_eq!(ProofLog::from_json(&json).unwrap(), parsed);

    std::fs::write(&ck, text.replacen("\"version\":1", "\"version\":99", 1)).unwrap();
    assert!(Checkpoint::load(&ck).is_err());
}
