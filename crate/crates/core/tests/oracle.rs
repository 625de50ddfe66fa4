mod common;

use common::*;

#[test]
fn corpus_static_facts_agree_with_interpreter() {
    let mut total = OracleResult::default();
    for (name, p) in corpus() {
        let grid = param_grid(&p, 3);
        total.merge(oracle_check(&name, &p, &grid, 3));
    }
    assert!(total.violations.is_empty(), "{:#?}", total.violations);
    assert!(total.incomplete.is_empty(), "{:#?}", total.incomplete);
    assert!(total.hb_pairs_checked > 1000);
}

#[test]
fn fuzz_smoke() {
    let mut total = OracleResult::default();
    for (k, (src, p)) in fuzz_programs(40, 7).iter().enumerate() {
        let grid = param_grid(p, 3);
        let r = oracle_check(&format!("fuzz#{k}\n{src}"), p, &grid, 3);
        total.merge(r);
    }
    assert!(total.violations.is_empty(), "{:#?}", total.violations);
    assert!(total.incomplete.is_empty(), "{:#?}", total.incomplete);
}

#[test]
#[ignore]
fn fuzz_stats() {
    let n: usize = std::env::var("FUZZ_N").ok().and_then(|s| s.parse().ok()).unwrap_or(200);
    let seed: u64 = std::env::var("FUZZ_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(11);
    let progs = fuzz_programs(n, seed);
    let mut total = OracleResult::default();
    for (k, (src, p)) in progs.iter().enumerate() {
        if k < 3 {
            println!("{src}");
        }
        total.merge(oracle_check(&format!("fuzz#{k}"), p, &param_grid(p, 3), 3));
    }
    let t = |p: &clockrace::lang::Program| p.table().basics().len();
    println!("basics {}", progs.iter().map(|(_, p)| t(p)).sum::<usize>());
    println!("{:?}", (total.hb_pairs_checked, total.clock_only, total.race_free, total.witnesses, total.dynamic_races, total.violations.len(), total.incomplete.len()));
    for v in total.violations.iter().take(10) { println!("{v}"); }
}
