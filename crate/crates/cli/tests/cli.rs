use std::path::Path;
use std::process::{Command, Output};

fn mms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mms")).args(args).output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn compute_g_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let j = dir.path().join("r.json");
    let c = dir.path().join("r.csv");
    let out = mms(&["compute-g", "--n", "11", "--k", "3", "--mode", "negative", "--json", p(&j), "--csv", p(&c)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["value"], "45");
    assert_eq!(v["verdict"], "HOLDS");
    let file: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&j).unwrap()).unwrap();
    assert_eq!(file, v);
    let csv = std::fs::read_to_string(&c).unwrap();
    assert!(csv.starts_with("k,n,g,ghat,nodes,time,example\n3,11,45,0,"));
}

#[test]
fn threshold_checks() {
    let holds = mms(&["compute-g", "--n", "9", "--k", "4", "--t", "35"]);
    assert_eq!(holds.status.code(), Some(0));
    assert_eq!(json(&holds)["verdict"], "HOLDS");
    let witness = mms(&["compute-g", "--n", "9", "--k", "4", "--t", "36"]);
    assert_eq!(witness.status.code(), Some(0));
    assert_eq!(json(&witness)["verdict"], "WITNESS");
}

#[test]
fn errors_exit_one() {
    let out = mms(&["compute-g", "--n", "3", "--k", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    assert_eq!(mms(&["replay-proof", "/nonexistent/log.txt"]).status.code(), Some(1));
    assert_eq!(mms(&["resume"]).status.code(), Some(1));
    assert_ne!(mms(&["compute-g", "--n", "9"]).status.code(), Some(0));
}

#[test]
fn small_queries() {
    let out = mms(&["scan-two-value", "--n", "19", "--k", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["value"], "3060");
    assert_eq!(v["example"], "18^1 (-1)^18");
    let nk = mms(&["compute-nk", "--k", "7"]);
    assert_eq!(json(&nk)["value"], "23");
    let f = mms(&["compute-f", "--k", "3", "--mode", "negative"]);
    assert_eq!(f.status.code(), Some(0));
    assert_eq!(json(&f)["value"], "11");
    let gs = mms(&["compute-gs", "--n", "11", "--k", "3", "--mode", "positive"]);
    assert_eq!(json(&gs)["value"], "46");
}

#[test]
fn nk_csv_output() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("nk.csv");
    assert_eq!(mms(&["compute-nk", "--k", "5", "--csv", p(&c)]).status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&c).unwrap(), "k,N_k,ratio\n2,7,3.500000\n3,11,3.666667\n4,14,3.500000\n5,17,3.400000\n");
}

#[test]
fn logs_replay() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("p.txt");
    let out = mms(&["compute-g", "--n", "11", "--k", "3", "--mode", "positive", "--log", p(&log)]);
    assert_eq!(out.status.code(), Some(0));
    for path in [log.clone(), dir.path().join("p.txt.json")] {
        let r = mms(&["replay-proof", p(&path)]);
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
        assert!(String::from_utf8_lossy(&r.stderr).contains("replayed"));
    }
    let text = std::fs::read_to_string(&log).unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, text.replacen("RESULT HOLDS NODES=", "RESULT HOLDS NODES=1", 1)).unwrap();
    assert_eq!(mms(&["replay-proof", p(&bad)]).status.code(), Some(1));
}

#[test]
fn budget_and_resume() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("ck.json");
    let log = dir.path().join("a.txt");
    let args = ["compute-g", "--n", "13", "--k", "4", "--mode", "negative", "--log", p(&log)];
    let part = mms(&[&args[..], &["--node-budget", "10", "--checkpoint", p(&ck)]].concat());
    assert_eq!(part.status.code(), Some(2));
    assert_eq!(json(&part)["verdict"], "INDETERMINATE");
    let done = mms(&["resume", "--resume", p(&ck), "--log", p(&log)]);
    assert_eq!(done.status.code(), Some(0), "{}", String::from_utf8_lossy(&done.stderr));
    assert_eq!(json(&done)["value"], "210");
    let resumed = std::fs::read_to_string(&log).unwrap();
    let whole = dir.path().join("b.txt");
    mms(&["compute-g", "--n", "13", "--k", "4", "--mode", "negative", "--log", p(&whole)]);
    assert_eq!(resumed, std::fs::read_to_string(&whole).unwrap());
}

#[test]
fn stochastic_runs_repeat() {
    let run = || {
        let out = mms(&["compute-g", "--n", "13", "--k", "4", "--mode", "stochastic", "--seed", "5", "--sample-limit", "20"]);
        let mut v = json(&out);
        v["wall_time_s"] = serde_json::Value::Null;
        v
    };
    assert_eq!(run(), run());
}
