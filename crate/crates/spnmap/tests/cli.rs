//! End-to-end checks of the command-line binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use spnmap::SPN_A;

const BN_AB: &str = "BN 2
ROOT 0 0.3 0.7
EDGE 0 1
CPT 1 | 0 : 0.1 0.9
CPT 1 | 1 : 0.8 0.2
";

fn spnmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spnmap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn validate_good_and_bad() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "a.spn", SPN_A);
    let out = spnmap(&["validate", "--spn", &good]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("2 variables"), "{stdout}");
    assert!(stdout.contains("11 nodes"), "{stdout}");
    assert!(stdout.contains("14 arcs"), "{stdout}");

    // Incomplete sum: children with different scopes.
    let bad = write(dir.path(), "bad.spn", "SPN 2\nL 0 0\nL 1 0\nS 0 0.5 1 0.5");
    let out = spnmap(&["validate", "--spn", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!String::from_utf8(out.stderr).unwrap().is_empty());
}

#[test]
fn eval_marginal_and_assignment() {
    let dir = tempfile::tempdir().unwrap();
    let spn = write(dir.path(), "a.spn", SPN_A);
    let out = spnmap(&["eval", "--spn", &spn]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "1");

    let out = spnmap(&["eval", "--spn", &spn, "--at", "x0=1,x1=0"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "0.378");

    let out = spnmap(&["eval", "--spn", &spn, "--at", "0=1"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "0.54");

    let out = spnmap(&["eval", "--spn", &spn, "--at", "x0=7"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn max_solvers_agree_on_the_example() {
    let dir = tempfile::tempdir().unwrap();
    let spn = write(dir.path(), "a.spn", SPN_A);
    for solver in ["bt", "amap", "kbt", "exact"] {
        let out = spnmap(&["max", "--spn", &spn, "--solver", solver]);
        assert!(out.status.success());
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert!(stdout.starts_with("x0=1 x1=0 score=0.378 status=finished"), "{solver}: {stdout}");
    }
    // Fixed-precision output on request.
    let out = spnmap(&["max", "--spn", &spn, "--solver", "bt", "--digits", "3"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("score=3.78e-1"), "{stdout}");
}

#[test]
fn map_reduces_then_solves() {
    let dir = tempfile::tempdir().unwrap();
    let spn = write(dir.path(), "a.spn", SPN_A);
    let out = spnmap(&["map", "--spn", &spn, "--problem", "q:0 e:1=1 h:-"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    // argmax_q S(q, X1=1): S(0,1)=0.218 < S(1,1)=0.162? No: 0.218 > 0.162,
    // so the answer is x0=0 with score 0.218.
    assert!(stdout.starts_with("x0=0 score=0.218"), "{stdout}");

    let out = spnmap(&["map", "--spn", &spn, "--problem", "q:0 h:1"]);
    assert_eq!(out.status.code(), Some(1), "missing e: field must fail");
}

#[test]
fn reduce_emits_a_loadable_spn() {
    let dir = tempfile::tempdir().unwrap();
    let spn = write(dir.path(), "a.spn", SPN_A);
    let reduced_path = dir.path().join("reduced.spn");
    let out = spnmap(&[
        "reduce",
        "--spn",
        &spn,
        "--problem",
        "q:0 e:1=1 h:-",
        "--out",
        reduced_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let reduced = spnmap::parse_spn(&fs::read_to_string(&reduced_path).unwrap()).unwrap();
    assert_eq!(reduced.root_scope(), &[0]);
    // S'(q) = S(q, X1=1).
    let s1 = spnmap::evaluate_assignment(&reduced, &[1, 0]).unwrap();
    assert!((s1 - 0.162).abs() < 1e-12);
}

#[test]
fn bn2spn_compiles_the_two_variable_chain() {
    let dir = tempfile::tempdir().unwrap();
    let bn = write(dir.path(), "ab.bn", BN_AB);
    let out = spnmap(&["bn2spn", "--bn", &bn]);
    assert!(out.status.success());
    let spn = spnmap::parse_spn(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(spn.num_nodes(), 9);
    assert_eq!(spn.num_arcs(), 10);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("9 nodes, 10 arcs"), "{stderr}");
}

#[test]
fn bench_writes_the_csv_contract() {
    let dir = tempfile::tempdir().unwrap();
    let spn = write(dir.path(), "a.spn", SPN_A);
    let csv_path = dir.path().join("report.csv");
    let out = spnmap(&[
        "bench",
        "--spn",
        &spn,
        "--proportions",
        "1,1,0",
        "--count",
        "3",
        "--solvers",
        "bt,fc+o+s",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&csv_path).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("solver,problem,score,time_ms,status"));
    assert!(csv.contains("solver,wins,finished,mean_time_ms"));
    // 2 solvers x 3 problems cell rows.
    assert_eq!(csv.lines().filter(|l| l.ends_with(",finished")).count(), 6);
}

#[test]
fn usage_errors_exit_2() {
    let out = spnmap(&["max"]); // missing the SPN path
    assert_eq!(out.status.code(), Some(2));
}
