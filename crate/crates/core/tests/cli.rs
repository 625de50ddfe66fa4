mod common;

use std::process::Command;

use common::*;

fn clockrace(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_clockrace")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).to_string())
}

fn corpus_path(name: &str) -> String {
    corpus_dir().join(format!("{name}.cx10")).display().to_string()
}

const NONLINEAR: &str = "
param N >= 1;
array A[1];
clocked finish {
  for (i = 1 : N) clocked async {
    for (k = 0 : i) {
      for (l = 0 : i) {
        advance;
      }
    }
    A[i] = S(A[i - 1]);
  }
}
";

#[test]
fn analyze_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("out.json");
    let (code, text) = clockrace(&["analyze", &corpus_path("jacobi"), "--json", json.to_str().unwrap()]);
    assert_eq!(code, 0, "{text}");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["status"], "RaceFree");
    assert_eq!(v["candidates"].as_array().unwrap().len(), 4);

    assert_eq!(clockrace(&["analyze", &corpus_path("jacobi_no_second_advance")]).0, 2);

    let bad = dir.path().join("bad.cx10");
    std::fs::write(&bad, "array A[1]; A[i] = S();").unwrap();
    assert_eq!(clockrace(&["analyze", bad.to_str().unwrap()]).0, 1);

    let nl = dir.path().join("nonlinear.cx10");
    std::fs::write(&nl, NONLINEAR).unwrap();
    let (code, text) = clockrace(&["analyze", nl.to_str().unwrap(), "--bound", "4"]);
    assert_eq!(code, 3, "{text}");
    assert!(text.contains("UnknownBounded(4)"));
    if let Some(cmd) = solver_cmd() {
        let (code, text) = clockrace(&["analyze", nl.to_str().unwrap(), "--solver-cmd", &cmd]);
        assert_eq!(code, 0, "{text}");
        assert!(text.contains("RaceFree(SMT)"));
    }
}

#[test]
fn emit_smt_files() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _) = clockrace(&["analyze", &corpus_path("qr"), "--emit-smt", dir.path().to_str().unwrap()]);
    assert_eq!(code, 2);
    for k in 0..8 {
        let s = std::fs::read_to_string(dir.path().join(format!("race_{k}.smt2"))).unwrap();
        assert!(s.contains("(check-sat)") && s.contains("(declare-const N Int)"), "{s}");
        assert!(s.contains("(* 2 N u_k)"));
    }
}

#[test]
fn interpret_dump() {
    let (code, text) = clockrace(&["interpret", &corpus_path("jacobi"), "--param", "N=3", "--param", "T=1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["terminated"], true);
    assert_eq!(v["races"].as_array().unwrap().len(), 0);
    assert_eq!(v["instances"].as_array().unwrap().len(), 8);
    assert!(v["hb_pairs"].as_u64().unwrap() > 0);

    let (code, _) = clockrace(&["interpret", &corpus_path("jacobi"), "--param", "N=3", "--param", "T=1", "--max-states", "5"]);
    assert_eq!(code, 4);
    let (code, _) = clockrace(&["interpret", &corpus_path("jacobi"), "--param", "N=3"]);
    assert_eq!(code, 1);
}

#[test]
fn generators() {
    let (code, text) = clockrace(&["gen-count", "--poly", "x^2+x*y+y^2"]);
    assert_eq!(code, 0);
    assert!(clockrace::lang::load(&text).is_ok());
    let (code, text) = clockrace(&["gen-race", "--p1", "x", "--p2", "y", "--all-orthants"]);
    assert_eq!(code, 0);
    assert_eq!(text.matches("// orthant").count(), 4);
    assert_eq!(clockrace(&["gen-count", "--poly", "x-1"]).0, 1);
}

#[test]
fn report_is_deterministic() {
    let config = clockrace::driver::AnalyzeConfig::default();
    for name in ["jacobi", "qr", "gauss_seidel"] {
        let a = clockrace::driver::analyze_source(name, &corpus_source(name), &config).unwrap();
        let b = clockrace::driver::analyze_source(name, &corpus_source(name), &config).unwrap();
        assert_eq!(a.to_json_stable(), b.to_json_stable());
    }
}
