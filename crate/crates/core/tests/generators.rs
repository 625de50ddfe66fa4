mod common;

use std::collections::BTreeMap;

use clockrace::driver::{analyze_source, AnalyzeConfig, Status};
use clockrace::gen::{counting_nest_source, generate_counting_nest, generate_race_test, race_test_source, sign_variants, PolynomialSpec};
use clockrace::race::Verdict;
use clockrace::semantics::{dynamic_races, explore, Limits};
use common::*;

fn spec_pair(p1: &str, p2: &str) -> (PolynomialSpec, PolynomialSpec) {
    let a = PolynomialSpec::parse(p1).unwrap();
    let b = PolynomialSpec::parse_with(p2, &a.variables).unwrap();
    (a.extend_variables(&b.variables), b)
}

fn points(vars: &[String], hi: i64) -> Vec<BTreeMap<String, i64>> {
    let mut out = vec![BTreeMap::new()];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|m| {
                (0..=hi).map(move |x| {
                    let mut m = m.clone();
                    m.insert(v.clone(), x);
                    m
                })
            })
            .collect();
    }
    out
}

#[test]
fn counting_nests_count_exactly() {
    for poly in ["x", "7", "x^2", "x^3 + 2*x", "x^2+x*y+y^2", "x*y*z + z^2", "3*x*y + 2"] {
        let q = PolynomialSpec::parse(poly).unwrap();
        let p = generate_counting_nest(&q).unwrap();
        let hi = if q.variables.len() > 2 { 3 } else { 6 };
        for pt in points(&q.variables, hi) {
            let f = explore(&p, &pt, Limits::default()).unwrap();
            assert!(f.terminated);
            assert_eq!(f.advances as i128, q.eval(&pt), "{poly} at {pt:?}\n{}", counting_nest_source(&q).unwrap());
        }
    }
}

#[test]
fn constant_nest_is_straight_line() {
    let src = counting_nest_source(&PolynomialSpec::parse("4").unwrap()).unwrap();
    assert_eq!(src.matches("advance;").count(), 4);
    assert!(!src.contains("for"));
}

/// Analyzer verdicts agree with exhaustive exploration over the bound box.
#[test]
fn race_tests_agree_with_interpreter() {
    let bound = 3;
    let cases = [("x", "y"), ("x", "x+1"), ("x^2", "2*y"), ("x*y", "x+y"), ("2*x", "y+3"), ("x^2+1", "x")];
    for (p1, p2) in cases {
        let (a, b) = spec_pair(p1, p2);
        let src = race_test_source(&a, &b).unwrap();
        let config = AnalyzeConfig { bound, ..AnalyzeConfig::default() };
        let report = analyze_source(p1, &src, &config).unwrap();
        let p = generate_race_test(&a, &b).unwrap();
        let mut dynamic = false;
        for bb in 1..=bound {
            let prm = params(&[("B", bb)]);
            let f = explore(&p, &prm, Limits::default()).unwrap();
            dynamic |= !dynamic_races(&p, &prm, &f).is_empty();
        }
        let roots = points(&a.variables, bound).into_iter().any(|pt| pt.values().all(|x| *x >= 1) && a.eval(&pt) == b.eval(&pt));
        assert_eq!(dynamic, roots, "{p1} vs {p2}");
        let witness = report.candidates.iter().any(|c| matches!(c.verdict, Verdict::RaceWitness { .. }));
        assert_eq!(witness, dynamic, "{p1} vs {p2}: {}", report.summary());
        if !dynamic {
            assert_ne!(report.status, Status::PotentialRaces(1));
        }
    }
}

#[test]
fn race_test_examples() {
    let run = |p1: &str, p2: &str| {
        let (a, b) = spec_pair(p1, p2);
        analyze_source("gen", &race_test_source(&a, &b).unwrap(), &AnalyzeConfig::default()).unwrap()
    };
    let r = run("x", "x+1");
    assert_eq!(r.status, Status::RaceFree);
    let r = run("x", "y");
    let Verdict::RaceWitness { witness } = &r.candidates[0].verdict else { panic!("{}", r.summary()) };
    assert_eq!((witness.a["x"], witness.a["y"]), (1, 1));
    let r = run("x^2", "2*y");
    let Verdict::RaceWitness { witness } = &r.candidates[0].verdict else { panic!("{}", r.summary()) };
    assert_eq!((witness.a["x"], witness.a["y"]), (2, 2));
}

#[test]
fn orthant_variants() {
    let (a, b) = spec_pair("x^2", "2*y");
    let v = sign_variants(&a, &b).unwrap();
    assert_eq!(v.len(), 4);
    assert_eq!(v[0].0, vec![1, 1]);
    for (_, q1, q2) in &v {
        assert!(race_test_source(q1, q2).is_ok());
    }
    let x = PolynomialSpec::parse("x").unwrap();
    let y = PolynomialSpec::parse("y").unwrap();
    assert!(race_test_source(&x, &y).is_err());
}
