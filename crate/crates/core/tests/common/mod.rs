#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use clockrace::affine::concrete_instances;
use clockrace::hb::{clocked_for_pair, hb_unclocked};
use clockrace::lang::{load, NodeId, Program};
use clockrace::phi::PhiTable;
use clockrace::race::{build_disproof, disprove_all, race_candidates, verify_witness, DisproveConfig, Verdict};
use clockrace::semantics::{dynamic_races, explore, DynamicFacts, Limits};

pub type Params = BTreeMap<String, i64>;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

pub fn corpus_source(name: &str) -> String {
    std::fs::read_to_string(corpus_dir().join(format!("{name}.cx10"))).expect("corpus file")
}

pub fn corpus() -> Vec<(String, Program)> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "cx10"))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().to_string();
            let prog = load(&std::fs::read_to_string(&p).unwrap()).unwrap_or_else(|e| panic!("{name}: {e}"));
            (name, prog)
        })
        .collect()
}

/// `CLOCKRACE_SOLVER_CMD`, else z3 from PATH.
pub fn solver_cmd() -> Option<String> {
    if let Ok(c) = std::env::var("CLOCKRACE_SOLVER_CMD") {
        return Some(c);
    }
    let found = std::process::Command::new("sh").arg("-c").arg("command -v z3").output().ok()?;
    found.status.success().then(|| "z3 -in".to_string())
}

pub fn params(kv: &[(&str, i64)]) -> Params {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Every parameter between max(lower bound, 1) and `hi`.
pub fn param_grid(p: &Program, hi: i64) -> Vec<Params> {
    let mut grid = vec![Params::new()];
    for prm in &p.params {
        let lo = prm.min.max(1);
        grid = grid
            .into_iter()
            .flat_map(|m| {
                (lo..=hi.max(lo)).map(move |x| {
                    let mut m = m.clone();
                    m.insert(prm.name.clone(), x);
                    m
                })
            })
            .collect();
    }
    grid
}

pub fn oracle_limits() -> Limits {
    Limits { max_states: 1_000_000, max_traces: None }
}

struct FuzzGen {
    rng: ChaCha8Rng,
    loops: usize,
    labels: usize,
    iters: Vec<String>,
    next_iter: usize,
}

impl FuzzGen {
    fn subscript(&mut self) -> String {
        let choices = ["0", "1", "N"];
        if self.iters.is_empty() || self.rng.gen_bool(0.25) {
            return choices[self.rng.gen_range(0..choices.len())].to_string();
        }
        let i = self.iters[self.rng.gen_range(0..self.iters.len())].clone();
        match self.rng.gen_range(0..4) {
            0 => format!("{i} + 1"),
            1 => format!("{i} - 1"),
            _ => i,
        }
    }

    fn access(&mut self) -> String {
        match self.rng.gen_range(0..3) {
            0 => "s".to_string(),
            1 => format!("A[{}]", self.subscript()),
            _ => format!("B[{}]", self.subscript()),
        }
    }

    fn basic(&mut self) -> String {
        self.labels += 1;
        let target = self.access();
        let reads: Vec<String> = (0..self.rng.gen_range(0..3)).map(|_| self.access()).collect();
        format!("{target} = S{}({});", self.labels, reads.join(", "))
    }

    /// `clocked`: an enclosing clocked finish is reachable without crossing an unclocked async.
    fn stmt(&mut self, depth: usize, clocked: bool) -> String {
        let leafy = depth >= 5 || self.labels >= 8;
        let pick = if leafy {
            self.rng.gen_range(0..3)
        } else if depth <= 2 {
            self.rng.gen_range(3..11)
        } else {
            self.rng.gen_range(0..11)
        };
        match pick {
            0 | 1 => self.basic(),
            2 if clocked => "advance;".to_string(),
            2 => self.basic(),
            3 | 4 => {
                let n = self.rng.gen_range(2..4);
                let body: Vec<String> = (0..n).map(|_| self.stmt(depth + 1, clocked)).collect();
                format!("{{ {} }}", body.join(" "))
            }
            5 if self.loops < 3 => {
                self.loops += 1;
                self.next_iter += 1;
                let i = format!("i{}", self.next_iter);
                let lo = self.rng.gen_range(0..2);
                let his = ["N", "N - 1", "2"];
                let mut hi = his[self.rng.gen_range(0..his.len())].to_string();
                if let Some(outer) = self.iters.last() {
                    if self.rng.gen_bool(0.3) {
                        hi = outer.clone();
                    }
                }
                self.iters.push(i.clone());
                let body = self.stmt(depth + 1, clocked);
                self.iters.pop();
                format!("for ({i} = {lo} : {hi}) {body}")
            }
            6 if !self.iters.is_empty() => {
                let i = self.iters[self.rng.gen_range(0..self.iters.len())].clone();
                let cond = if self.rng.gen_bool(0.5) { format!("{i} >= 1") } else { format!("{i} <= N - 1") };
                let body = self.stmt(depth + 1, clocked);
                format!("if ({cond}) {body}")
            }
            7 if clocked => format!("clocked async {}", self.stmt(depth + 1, true)),
            8 => format!("async {}", self.stmt(depth + 1, false)),
            9 => format!("clocked finish {}", self.stmt(depth + 1, true)),
            10 => format!("finish {}", self.stmt(depth + 1, clocked)),
            _ => self.basic(),
        }
    }
}

/// Deterministic random programs that parse and pass the clock rules.
pub fn fuzz_programs(count: usize, seed: u64) -> Vec<(String, Program)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        assert!(attempts < count * 50, "fuzz generator rejects too much");
        let mut g = FuzzGen { rng: ChaCha8Rng::seed_from_u64(rng.gen()), loops: 0, labels: 0, iters: Vec::new(), next_iter: 0 };
        let n = g.rng.gen_range(2..4);
        let body: Vec<String> = (0..n).map(|_| g.stmt(2, true)).collect();
        let src = format!("param N >= 1;\narray A[1];\narray B[1];\narray s[0];\nclocked finish {{ {} }}\n", body.join(" "));
        if g.labels < 3 {
            continue;
        }
        if let Ok(p) = load(&src) {
            out.push((src, p));
        }
    }
    out
}

/// Counters and violations from comparing the analyzer with the interpreter.
#[derive(Default, Debug)]
pub struct OracleResult {
    pub violations: Vec<String>,
    pub incomplete: Vec<String>,
    pub hb_pairs_checked: usize,
    /// Pairs ordered by the clocked relation but not the unclocked one.
    pub clock_only: usize,
    pub race_free: usize,
    pub witnesses: usize,
    pub dynamic_races: usize,
}

impl OracleResult {
    pub fn merge(&mut self, o: OracleResult) {
        self.violations.extend(o.violations);
        self.incomplete.extend(o.incomplete);
        self.hb_pairs_checked += o.hb_pairs_checked;
        self.clock_only += o.clock_only;
        self.race_free += o.race_free;
        self.witnesses += o.witnesses;
        self.dynamic_races += o.dynamic_races;
    }
}

fn instance_index(facts: &DynamicFacts, node: NodeId, iters: &Params) -> Option<usize> {
    facts.find(node, iters)
}

/// Static relations and verdicts checked against exhaustive exploration.
pub fn oracle_check(name: &str, p: &Program, grid: &[Params], bound: i64) -> OracleResult {
    let mut r = OracleResult::default();
    let t = p.table();
    let phi = PhiTable::build(p, 30);
    let basics: Vec<NodeId> = t.basics().iter().map(|s| s.id).collect();
    let candidates = race_candidates(p);
    let problems: Vec<_> = candidates.iter().map(|c| build_disproof(p, c, &phi)).collect();
    let config = DisproveConfig { bound, ..DisproveConfig::default() };
    let outcomes = disprove_all(p, &problems, &config);
    let mut cache: BTreeMap<Params, Option<DynamicFacts>> = BTreeMap::new();
    let mut facts_at = |prm: &Params, r: &mut OracleResult| -> Option<DynamicFacts> {
        cache
            .entry(prm.clone())
            .or_insert_with(|| match explore(p, prm, oracle_limits()) {
                Ok(f) if f.terminated => Some(f),
                Ok(_) => {
                    r.incomplete.push(format!("{name} {prm:?}: not terminated"));
                    None
                }
                Err(e) => {
                    r.incomplete.push(format!("{name} {prm:?}: {e}"));
                    None
                }
            })
            .clone()
    };

    for prm in grid {
        let Some(facts) = facts_at(prm, &mut r) else { continue };
        for &u in &basics {
            for &v in &basics {
                let Ok(base) = hb_unclocked(p, u, v) else { continue };
                let clocked = clocked_for_pair(p, &phi, u, v);
                for x in concrete_instances(&t, u, prm) {
                    for y in concrete_instances(&t, v, prm) {
                        let (Some(ix), Some(iy)) = (instance_index(&facts, u, &x), instance_index(&facts, v, &y)) else {
                            r.violations.push(format!("{name}: instance missing from exploration"));
                            continue;
                        };
                        r.hb_pairs_checked += 1;
                        if base.holds(&x, &y, prm) && !facts.hb(ix, iy) {
                            r.violations.push(format!("{name} {prm:?}: unclocked hb {u}{x:?} -> {v}{y:?} not dynamic"));
                        }
                        let by_clock = clocked.holds(&x, &y, prm);
                        if by_clock && !base.holds(&x, &y, prm) {
                            r.clock_only += 1;
                        }
                        if by_clock && !facts.hb(ix, iy) {
                            r.violations.push(format!("{name} {prm:?}: clocked hb {u}{x:?} -> {v}{y:?} not dynamic"));
                        }
                    }
                }
            }
        }
        for dr in dynamic_races(p, prm, &facts) {
            r.dynamic_races += 1;
            let matching: Vec<usize> = candidates
                .iter()
                .enumerate()
                .filter(|(_, c)| {
                    c.a.access.array == dr.array
                        && ((c.a.node == dr.a.node && c.b.node == dr.b.node) || (c.a.node == dr.b.node && c.b.node == dr.a.node))
                })
                .map(|(k, _)| k)
                .collect();
            if matching.is_empty() {
                r.violations.push(format!("{name} {prm:?}: dynamic {dr} has no candidate"));
            } else if matching.iter().all(|&k| outcomes[k].verdict.is_race_free()) {
                r.violations.push(format!("{name} {prm:?}: dynamic {dr} but candidates are race-free"));
            }
        }
    }

    for (d, o) in problems.iter().zip(&outcomes) {
        match &o.verdict {
            Verdict::RaceFree { .. } => r.race_free += 1,
            Verdict::RaceWitness { witness } => {
                r.witnesses += 1;
                let mut w = witness.clone();
                if !verify_witness(p, d, &mut w) {
                    r.violations.push(format!("{name}: witness {witness} fails substitution"));
                    continue;
                }
                let Some(facts) = facts_at(&witness.params, &mut r) else { continue };
                let c = &d.candidate;
                let races = dynamic_races(p, &witness.params, &facts);
                let hit = races.iter().any(|dr| {
                    let same = |i: &clockrace::semantics::InstanceId, node: NodeId, it: &Params| i.node == node && &i.iters == it;
                    (same(&dr.a, c.a.node, &witness.a) && same(&dr.b, c.b.node, &witness.b))
                        || (same(&dr.b, c.a.node, &witness.a) && same(&dr.a, c.b.node, &witness.b))
                });
                if !hit {
                    r.violations.push(format!("{name}: witness {witness} not a dynamic race"));
                }
            }
            Verdict::UnknownBounded { .. } => {}
        }
    }
    r
}
