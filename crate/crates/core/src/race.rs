//! Race candidates and their disproof.
//!
//! A candidate is a pair of conflicting accesses whose instances are not
//! ordered by the unclocked happens-before relation. It is disproved by
//! showing that every such pair runs under the same clock instance at
//! different phases.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use regex::Regex;
use serde::Serialize;

use crate::affine::{
    concrete_instances, conjunction_emptiness, domain_conjunction, simplify_conjunction, AffineExpr, AffineSet,
    Conjunction, Constraint, ConstraintKind, Emptiness,
};
use crate::hb::{reduce_in, relation_between, same_instance_constraints, ClockReduction};
use crate::lang::{AccessMode, AccessRef, NodeId, NodeTable, Program, StmtKind};
use crate::phi::{count_concrete, PhiTable};
use crate::poly::{Monomial, QuasiPoly, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RaceKind {
    ReadWrite,
    WriteWrite,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AccessSite {
    pub node: NodeId,
    pub label: String,
    pub access: AccessRef,
}

/// Conflicting, unordered instance pairs of two accesses. The first access
/// (`a`, the reader for read-write pairs) uses `u_` iterators, the second `v_`.
#[derive(Clone, Debug, Serialize)]
pub struct RaceCandidate {
    pub index: usize,
    pub kind: RaceKind,
    pub a: AccessSite,
    pub b: AccessSite,
    pub system: AffineSet,
    pub emptiness: Emptiness,
    pub clock: Option<ClockReduction>,
    pub description: String,
}

fn rename_side<'a>(table: &'a NodeTable<'_>, node: NodeId, prefix: &'a str) -> impl Fn(&str) -> String + 'a {
    crate::hb::prefixer(table, node, prefix)
}

/// All read-write and write-write candidates, in a deterministic order.
pub fn race_candidates(p: &Program) -> Vec<RaceCandidate> {
    let t = p.table();
    let mut sites: Vec<AccessSite> = Vec::new();
    for s in t.basics() {
        let StmtKind::Basic(b) = &s.kind else { unreachable!() };
        for acc in b.accesses() {
            sites.push(AccessSite { node: s.id, label: t.label(s.id), access: acc.clone() });
        }
    }
    let writes: Vec<&AccessSite> = sites.iter().filter(|s| s.access.mode == AccessMode::Write).collect();
    let reads: Vec<&AccessSite> = sites.iter().filter(|s| s.access.mode == AccessMode::Read).collect();
    let mut pairs: Vec<(RaceKind, &AccessSite, &AccessSite)> = Vec::new();
    for r in &reads {
        for w in &writes {
            if r.access.array == w.access.array {
                pairs.push((RaceKind::ReadWrite, r, w));
            }
        }
    }
    for (i, w1) in writes.iter().enumerate() {
        for w2 in &writes[i..] {
            if w1.access.array == w2.access.array {
                pairs.push((RaceKind::WriteWrite, w1, w2));
            }
        }
    }
    let built: Vec<Option<RaceCandidate>> = pairs
        .par_iter()
        .map(|(kind, a, b)| build_candidate(p, *kind, a, b))
        .collect();
    let mut out: Vec<RaceCandidate> = built.into_iter().flatten().collect();
    for (k, c) in out.iter_mut().enumerate() {
        c.index = k;
    }
    out
}

fn build_candidate(p: &Program, kind: RaceKind, a: &AccessSite, b: &AccessSite) -> Option<RaceCandidate> {
    let t = p.table();
    let (uvars, uconj) = domain_conjunction(&t, a.node, "u_");
    let (vvars, vconj) = domain_conjunction(&t, b.node, "v_");
    let ru = rename_side(&t, a.node, "u_");
    let rv = rename_side(&t, b.node, "v_");
    let mut base = uconj;
    base.extend(vconj);
    for (x, y) in a.access.subscripts.iter().zip(&b.access.subscripts) {
        base.push(Constraint::eq(&x.rename(&ru), &y.rename(&rv)));
    }
    let mut vars = uvars.clone();
    vars.extend(vvars.iter().cloned());
    let ctx = p.context();
    let mut system = AffineSet::from_conjunction(vars.clone(), base.clone()).with_context(ctx.clone());
    if system.is_empty() == Emptiness::Empty {
        return None;
    }
    let (_, ab) = relation_between(&t, a.node, b.node, "u_", "v_", None);
    let (_, ba) = relation_between(&t, b.node, a.node, "v_", "u_", None);
    let mut hb = AffineSet::empty(vars.clone());
    hb.disjuncts = ab.into_iter().chain(ba).collect();
    system = system.subtract(&hb);
    if a.node == b.node {
        let same: Conjunction = uvars
            .iter()
            .zip(&vvars)
            .map(|(x, y)| Constraint::eq(&AffineExpr::var(x.clone()), &AffineExpr::var(y.clone())))
            .collect();
        system = system.subtract(&AffineSet::from_conjunction(vars.clone(), same));
    }
    let system = system.simplify();
    let emptiness = system.is_empty();
    if emptiness == Emptiness::Empty {
        return None;
    }
    let shown = match system.disjuncts.as_slice() {
        [only] => only.as_slice(),
        _ => base.as_slice(),
    };
    let description = describe(&t, kind, a, b, shown, &ctx);
    Some(RaceCandidate {
        index: 0,
        kind,
        a: a.clone(),
        b: b.clone(),
        system,
        emptiness,
        clock: reduce_in(&t, a.node, b.node),
        description,
    })
}

/// `u_x` prints as `x`, `v_x` as `x'`.
fn display_name(v: &str) -> String {
    if let Some(x) = v.strip_prefix("u_") {
        x.to_string()
    } else if let Some(x) = v.strip_prefix("v_") {
        format!("{x}'")
    } else {
        v.to_string()
    }
}

fn show_expr(e: &AffineExpr) -> String {
    e.rename(display_name).to_string()
}

fn describe(t: &NodeTable<'_>, kind: RaceKind, a: &AccessSite, b: &AccessSite, base: &[Constraint], ctx: &[Constraint]) -> String {
    let uiters = t.enclosing_iterators(a.node);
    let viters = t.enclosing_iterators(b.node);
    // express the second instance through the first where the subscripts allow it
    let mut conj: Vec<Constraint> = Vec::new();
    for c in base {
        let opposite = conj
            .iter()
            .position(|k| !k.is_equality() && !c.is_equality() && k.expr == c.expr.scale(-1));
        match opposite {
            Some(k) => conj[k] = Constraint::zero(c.expr.clone()),
            None => conj.push(c.clone()),
        }
    }
    let mut vexpr: Vec<AffineExpr> = viters.iter().map(|x| AffineExpr::var(format!("v_{x}"))).collect();
    loop {
        let found = conj.iter().enumerate().find_map(|(k, c)| {
            if !c.is_equality() {
                return None;
            }
            viters.iter().map(|x| format!("v_{x}")).find(|v| c.expr.coeff(v).abs() == 1).map(|v| (k, v))
        });
        let Some((k, v)) = found else { break };
        let c = conj.remove(k);
        let a_ = c.expr.coeff(&v);
        let mut rest = c.expr.clone();
        rest.terms.remove(&v);
        let value = rest.scale(-a_);
        conj = conj.iter().map(|x| x.substitute(&v, &value)).collect();
        vexpr = vexpr.iter().map(|e| e.substitute(&v, &value)).collect();
    }
    let conds = simplify_conjunction(&conj, ctx);
    let order: Vec<String> = uiters
        .iter()
        .map(|x| format!("u_{x}"))
        .chain(viters.iter().map(|x| format!("v_{x}")))
        .collect();
    let cond_text = render_conditions(&conds, &order);
    let who = |label: &str, parts: Vec<String>| format!("{label}<{}>", parts.join(","));
    let first = who(&a.label, uiters.clone());
    let second = who(&b.label, vexpr.iter().map(show_expr).collect());
    let (verb, what) = match kind {
        RaceKind::ReadWrite => ("Read", "read-write"),
        RaceKind::WriteWrite => ("Write", "write-write"),
    };
    let mut s = format!("{verb} {} by {first} is in {what} race with {second}", a.access);
    if !cond_text.is_empty() {
        let _ = write!(s, " when {cond_text}");
    }
    s
}

/// Group single-variable bounds as `lo <= x <= hi`.
fn render_conditions(conds: &[Constraint], order: &[String]) -> String {
    let mut lower: BTreeMap<usize, Vec<AffineExpr>> = BTreeMap::new();
    let mut upper: BTreeMap<usize, Vec<AffineExpr>> = BTreeMap::new();
    let mut other = Vec::new();
    for c in conds {
        let lead = order.iter().position(|v| c.mentions(v));
        match (c.kind, lead) {
            (ConstraintKind::NonNeg, Some(k)) if c.expr.coeff(&order[k]).abs() == 1 => {
                let v = &order[k];
                let a = c.expr.coeff(v);
                let mut rest = c.expr.clone();
                rest.terms.remove(v);
                if a == 1 {
                    lower.entry(k).or_default().push(rest.scale(-1));
                } else {
                    upper.entry(k).or_default().push(rest);
                }
            }
            _ => other.push(c.clone()),
        }
    }
    let mut parts = Vec::new();
    for (k, v) in order.iter().enumerate() {
        let name = display_name(v);
        let lo = lower.remove(&k).unwrap_or_default();
        let hi = upper.remove(&k).unwrap_or_default();
        match (lo.as_slice(), hi.as_slice()) {
            ([], []) => {}
            ([l], [h]) => parts.push(format!("{} <= {name} <= {}", show_expr(l), show_expr(h))),
            _ => {
                parts.extend(lo.iter().map(|l| format!("{name} >= {}", show_expr(l))));
                parts.extend(hi.iter().map(|h| format!("{name} <= {}", show_expr(h))));
            }
        }
    }
    parts.extend(other.iter().map(|c| c.rename(display_name).to_string()));
    parts.join(" and ")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    Affine,
    Smt,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Witness {
    pub params: BTreeMap<String, i64>,
    pub a: BTreeMap<String, i64>,
    pub b: BTreeMap<String, i64>,
    /// Phases of both instances when they share a clock instance.
    pub phases: Option<(u64, u64)>,
    pub found_by: String,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |m: &BTreeMap<String, i64>| m.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",");
        write!(f, "[{}] a<{}> b<{}>", show(&self.params), show(&self.a), show(&self.b))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    RaceFree { method: Method },
    RaceWitness { witness: Witness },
    UnknownBounded { bound: i64 },
}

impl Verdict {
    pub fn is_race_free(&self) -> bool {
        matches!(self, Verdict::RaceFree { .. })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::RaceFree { method: Method::Affine } => write!(f, "RaceFree(Affine)"),
            Verdict::RaceFree { method: Method::Smt } => write!(f, "RaceFree(SMT)"),
            Verdict::RaceWitness { witness } => write!(f, "RaceWitness({witness})"),
            Verdict::UnknownBounded { bound } => write!(f, "UnknownBounded({bound})"),
        }
    }
}

/// A candidate together with the phase functions of its relevant clock.
#[derive(Clone, Debug, Serialize)]
pub struct DisproofProblem {
    pub candidate: RaceCandidate,
    /// No clocked finish contains both statements.
    pub clockless: bool,
    /// Phase functions exist but could not be computed or validated.
    pub unvalidated: bool,
    pub same_instance: Conjunction,
    #[serde(serialize_with = "ser_opt_poly")]
    pub phi_a: Option<QuasiPoly>,
    #[serde(serialize_with = "ser_opt_poly")]
    pub phi_b: Option<QuasiPoly>,
}

fn ser_opt_poly<S: serde::Serializer>(p: &Option<QuasiPoly>, s: S) -> Result<S::Ok, S::Error> {
    match p {
        Some(p) => s.serialize_str(&p.to_string()),
        None => s.serialize_none(),
    }
}

impl DisproofProblem {
    /// `phi_a - phi_b`, when both are known.
    pub fn phi_difference(&self) -> Option<QuasiPoly> {
        Some(self.phi_a.as_ref()? - self.phi_b.as_ref()?)
    }
}

pub fn build_disproof(p: &Program, c: &RaceCandidate, phi: &PhiTable) -> DisproofProblem {
    let t = p.table();
    let Some(r) = c.clock else {
        return DisproofProblem {
            candidate: c.clone(),
            clockless: true,
            unvalidated: false,
            same_instance: Vec::new(),
            phi_a: None,
            phi_b: None,
        };
    };
    let fa = phi.get(r.rep_u, r.clock).and_then(|e| e.usable());
    let fb = phi.get(r.rep_v, r.clock).and_then(|e| e.usable());
    let ru = rename_side(&t, r.rep_u, "u_");
    let rv = rename_side(&t, r.rep_v, "v_");
    DisproofProblem {
        candidate: c.clone(),
        clockless: false,
        unvalidated: fa.is_none() || fb.is_none(),
        same_instance: same_instance_constraints(&t, r.clock, "u_", "v_"),
        phi_a: fa.map(|f| f.rename(&ru)),
        phi_b: fb.map(|f| f.rename(&rv)),
    }
}

#[derive(Clone, Debug)]
pub struct DisproveConfig {
    pub solver_cmd: Option<String>,
    pub bound: i64,
    pub solver_timeout: Duration,
}

impl Default for DisproveConfig {
    fn default() -> Self {
        DisproveConfig { solver_cmd: None, bound: 8, solver_timeout: Duration::from_secs(60) }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub verdict: Verdict,
    pub log: Vec<String>,
}

/// Decide one problem: affine reasoning, then the external solver, then bounded search.
pub fn disprove(p: &Program, d: &DisproofProblem, config: &DisproveConfig) -> Outcome {
    let mut log = Vec::new();
    let sys = &d.candidate.system;
    let finish = |verdict: Verdict, log: Vec<String>| Outcome { verdict, log };

    if d.clockless {
        log.push("no common clock: every candidate pair is a race".into());
        return match bounded_search(p, d, config.bound, &mut log) {
            Some(w) => finish(Verdict::RaceWitness { witness: w }, log),
            None => finish(Verdict::UnknownBounded { bound: config.bound }, log),
        };
    }

    // pairs in different instances of the clock are never ordered by it
    let part_a = if d.same_instance.is_empty() {
        Emptiness::Empty
    } else {
        let mut diff = AffineSet::empty(sys.variables.clone());
        diff.disjuncts = vec![d.same_instance.clone()];
        sys.subtract(&diff).is_empty()
    };
    log.push(format!("different clock instance: {part_a:?}"));
    if part_a != Emptiness::Empty {
        if let Some(w) = bounded_search(p, d, config.bound, &mut log) {
            return finish(Verdict::RaceWitness { witness: w }, log);
        }
        if part_a == Emptiness::NonEmpty {
            log.push("different-instance pairs exist but none within the search bound".into());
            return finish(Verdict::UnknownBounded { bound: config.bound }, log);
        }
    }

    // same instance, equal phases
    let mut affine_free = false;
    if let Some(diff) = d.phi_difference() {
        if diff.degree() <= 1 {
            let (_, terms) = diff.integer_scaled();
            let mut eq = AffineExpr::zero();
            for (m, c) in terms {
                let c = i64::try_from(c).expect("coefficient fits in i64");
                match m.vars().next() {
                    None => eq.constant += c,
                    Some((v, _)) => eq.add_term(v.to_string(), c),
                }
            }
            let mut extra = d.same_instance.clone();
            extra.push(Constraint::zero(eq));
            let part_b = sys.intersect_conj(&extra).is_empty();
            log.push(format!("affine phase equality: {part_b:?}"));
            match part_b {
                Emptiness::Empty if part_a == Emptiness::Empty => {
                    return finish(Verdict::RaceFree { method: Method::Affine }, log)
                }
                Emptiness::Empty => affine_free = true,
                _ => {}
            }
        }
    } else {
        log.push("phase functions unavailable".into());
    }

    if !affine_free && !d.unvalidated {
        if let Some(cmd) = &config.solver_cmd {
            let script = emit_smtlib(d);
            match run_solver(cmd, &script, config.solver_timeout) {
                Ok(out) => {
                    let first = out.split_whitespace().next().unwrap_or("").to_string();
                    log.push(format!("solver answered `{first}`"));
                    match first.as_str() {
                        "unsat" if part_a == Emptiness::Empty => {
                            return finish(Verdict::RaceFree { method: Method::Smt }, log)
                        }
                        "sat" => {
                            let model = parse_model(&out);
                            match check_model(p, d, &model) {
                                Some(w) => return finish(Verdict::RaceWitness { witness: w }, log),
                                None => log.push("solver model failed the substitution check".into()),
                            }
                        }
                        _ => {}
                    }
                }
                Err(e) => log.push(format!("solver failed: {e}")),
            }
        }
    }

    match bounded_search(p, d, config.bound, &mut log) {
        Some(w) => finish(Verdict::RaceWitness { witness: w }, log),
        None => finish(Verdict::UnknownBounded { bound: config.bound }, log),
    }
}

/// Disprove every candidate, in parallel, preserving candidate order.
pub fn disprove_all(p: &Program, problems: &[DisproofProblem], config: &DisproveConfig) -> Vec<Outcome> {
    problems.par_iter().map(|d| disprove(p, d, config)).collect()
}

fn run_solver(cmd: &str, script: &str, timeout: Duration) -> Result<String, String> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(cmd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .map_err(|e| e.to_string())?;
    child
        .stdin
        .take()
        .expect("piped stdin")
        .write_all(script.as_bytes())
        .map_err(|e| e.to_string())?;
    let start = Instant::now();
    loop {
        match child.try_wait().map_err(|e| e.to_string())? {
            Some(_) => break,
            None if start.elapsed() > timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(format!("timed out after {:?}", timeout));
            }
            None => std::thread::sleep(Duration::from_millis(5)),
        }
    }
    let mut out = String::new();
    child.stdout.take().expect("piped stdout").read_to_string(&mut out).map_err(|e| e.to_string())?;
    Ok(out)
}

/// Integer assignments from a `(get-model)` answer.
pub fn parse_model(out: &str) -> BTreeMap<String, i64> {
    let re = Regex::new(r"\(define-fun\s+(\S+)\s+\(\)\s+Int\s+(\(\s*-\s*\d+\s*\)|-?\d+)\s*\)").expect("valid regex");
    let mut m = BTreeMap::new();
    for cap in re.captures_iter(out) {
        let raw: String = cap[2].chars().filter(|c| c.is_ascii_digit() || *c == '-').collect();
        if let Ok(v) = raw.parse::<i64>() {
            m.insert(cap[1].to_string(), v);
        }
    }
    m
}

fn split_point(d: &DisproofProblem, point: &BTreeMap<String, i64>) -> Witness {
    let mut w = Witness { params: BTreeMap::new(), a: BTreeMap::new(), b: BTreeMap::new(), phases: None, found_by: String::new() };
    let sys = &d.candidate.system;
    for v in sys.dims() {
        let x = point.get(&v).copied().unwrap_or(0);
        if let Some(n) = v.strip_prefix("u_") {
            w.a.insert(n.to_string(), x);
        } else if let Some(n) = v.strip_prefix("v_") {
            w.b.insert(n.to_string(), x);
        } else {
            w.params.insert(v, x);
        }
    }
    w
}

fn check_model(p: &Program, d: &DisproofProblem, model: &BTreeMap<String, i64>) -> Option<Witness> {
    let mut w = split_point(d, model);
    for prm in &p.params {
        w.params.entry(prm.name.clone()).or_insert(0);
    }
    w.found_by = "solver".into();
    verify_witness(p, d, &mut w).then_some(w)
}

/// Exact re-check of a claimed race: the pair is in the system, and either
/// runs under different clock instances or at equal brute-force phases.
pub fn verify_witness(p: &Program, d: &DisproofProblem, w: &mut Witness) -> bool {
    let mut point: BTreeMap<String, i64> = w.params.clone();
    point.extend(w.a.iter().map(|(k, v)| (format!("u_{k}"), *v)));
    point.extend(w.b.iter().map(|(k, v)| (format!("v_{k}"), *v)));
    if p.check_params(&w.params).is_err() || !d.candidate.system.contains(&point) {
        return false;
    }
    if d.clockless {
        return true;
    }
    let same = d.same_instance.iter().all(|c| c.holds(&point) == Some(true));
    if !same {
        return true;
    }
    let r = d.candidate.clock.expect("clocked problem");
    let restrict = |m: &BTreeMap<String, i64>, node: NodeId| -> BTreeMap<String, i64> {
        let t = p.table();
        let keep = t.enclosing_iterators(node);
        m.iter().filter(|(k, _)| keep.contains(k)).map(|(k, v)| (k.clone(), *v)).collect()
    };
    let pa = count_concrete(p, r.rep_u, &restrict(&w.a, r.rep_u), r.clock, &w.params);
    let pb = count_concrete(p, r.rep_v, &restrict(&w.b, r.rep_v), r.clock, &w.params);
    match (pa, pb) {
        (Ok(x), Ok(y)) if x == y => {
            w.phases = Some((x, y));
            true
        }
        _ => false,
    }
}

/// Exhaustive search with every parameter between its lower bound and `bound`.
pub fn bounded_search(p: &Program, d: &DisproofProblem, bound: i64, log: &mut Vec<String>) -> Option<Witness> {
    let t = p.table();
    let mut grid = vec![BTreeMap::new()];
    for prm in &p.params {
        let hi = bound.max(prm.min);
        grid = grid
            .into_iter()
            .flat_map(|m: BTreeMap<String, i64>| {
                (prm.min..=hi).map(move |x| {
                    let mut m = m.clone();
                    m.insert(prm.name.clone(), x);
                    m
                })
            })
            .collect();
    }
    // smallest parameters first
    grid.sort_by_key(|m| (m.values().sum::<i64>(), m.values().cloned().collect::<Vec<_>>()));
    let c = &d.candidate;
    let phi_cache = |f: &Option<QuasiPoly>, env: &BTreeMap<String, i64>| f.as_ref().and_then(|f| f.eval(env));
    let mut checked = 0usize;
    for params in &grid {
        let ia = concrete_instances(&t, c.a.node, params);
        let ib = concrete_instances(&t, c.b.node, params);
        for x in &ia {
            for y in &ib {
                let mut point = params.clone();
                point.extend(x.iter().map(|(k, v)| (format!("u_{k}"), *v)));
                point.extend(y.iter().map(|(k, v)| (format!("v_{k}"), *v)));
                if !c.system.contains(&point) {
                    continue;
                }
                checked += 1;
                if !d.clockless && d.same_instance.iter().all(|k| k.holds(&point) == Some(true)) {
                    // cheap polynomial filter before the exact count
                    if let (Some(a), Some(b)) = (phi_cache(&d.phi_a, &point), phi_cache(&d.phi_b, &point)) {
                        if a != b {
                            continue;
                        }
                    }
                }
                let mut w = Witness {
                    params: params.clone(),
                    a: x.clone(),
                    b: y.clone(),
                    phases: None,
                    found_by: "bounded search".into(),
                };
                if verify_witness(p, d, &mut w) {
                    log.push(format!("bounded search: witness after {checked} in-system pairs"));
                    return Some(w);
                }
            }
        }
    }
    log.push(format!("bounded search: {checked} in-system pairs, no witness up to {bound}"));
    None
}

fn smt_num(c: i128) -> String {
    if c < 0 {
        format!("(- {})", -c)
    } else {
        c.to_string()
    }
}

fn smt_sum(mut parts: Vec<String>) -> String {
    match parts.len() {
        0 => "0".into(),
        1 => parts.pop().unwrap(),
        _ => format!("(+ {})", parts.join(" ")),
    }
}

fn smt_affine(e: &AffineExpr) -> String {
    let mut parts: Vec<String> = e
        .terms
        .iter()
        .map(|(v, c)| if *c == 1 { v.clone() } else { format!("(* {} {v})", smt_num(*c as i128)) })
        .collect();
    if e.constant != 0 {
        parts.push(smt_num(e.constant as i128));
    }
    smt_sum(parts)
}

fn smt_constraint(c: &Constraint) -> String {
    let mut pos = AffineExpr::zero();
    let mut neg = AffineExpr::zero();
    for (v, k) in &c.expr.terms {
        if *k > 0 {
            pos.add_term(v.clone(), *k);
        } else {
            neg.add_term(v.clone(), -k);
        }
    }
    if c.expr.constant >= 0 {
        pos.constant = c.expr.constant;
    } else {
        neg.constant = -c.expr.constant;
    }
    let op = if c.is_equality() { "=" } else { ">=" };
    format!("({op} {} {})", smt_affine(&pos), smt_affine(&neg))
}

fn smt_monomial(m: &Monomial) -> Vec<String> {
    m.vars().flat_map(|(v, e)| std::iter::repeat(v.to_string()).take(e as usize)).collect()
}

fn smt_poly(terms: &[(Monomial, i128)]) -> String {
    let parts = terms
        .iter()
        .filter(|(_, c)| *c != 0)
        .map(|(m, c)| {
            let mut factors = smt_monomial(m);
            if *c != 1 || factors.is_empty() {
                factors.insert(0, smt_num(*c));
            }
            if factors.len() == 1 {
                factors.pop().unwrap()
            } else {
                format!("(* {})", factors.join(" "))
            }
        })
        .collect();
    smt_sum(parts)
}

/// SMT-LIB v2 script for the whole problem: a model is a racing pair.
pub fn emit_smtlib(d: &DisproofProblem) -> String {
    let sys = &d.candidate.system;
    let mut s = String::new();
    let _ = writeln!(s, "; {}", d.candidate.description);
    s.push_str("(set-logic QF_NIA)\n");
    let mut names: BTreeSet<String> = sys.dims().into_iter().collect();
    if let (Some(a), Some(b)) = (&d.phi_a, &d.phi_b) {
        names.extend(a.variables());
        names.extend(b.variables());
    }
    for n in &names {
        let _ = writeln!(s, "(declare-const {n} Int)");
    }
    let live: Vec<&Conjunction> = sys
        .disjuncts
        .iter()
        .filter(|dj| {
            let mut probe = (*dj).clone();
            probe.extend(sys.context.iter().cloned());
            conjunction_emptiness(&probe) != Emptiness::Empty
        })
        .collect();
    if live.is_empty() {
        s.push_str("(assert false)\n(check-sat)\n(get-model)\n");
        return s;
    }
    for c in &sys.context {
        let _ = writeln!(s, "(assert {})", smt_constraint(c));
    }
    let conj_text = |cj: &Conjunction| -> String {
        match cj.len() {
            0 => "true".into(),
            1 => smt_constraint(&cj[0]),
            _ => format!("(and {})", cj.iter().map(smt_constraint).collect::<Vec<_>>().join(" ")),
        }
    };
    if live.len() == 1 {
        for c in live[0] {
            let _ = writeln!(s, "(assert {})", smt_constraint(c));
        }
    } else {
        let _ = writeln!(s, "(assert (or {}))", live.iter().map(|c| conj_text(c)).collect::<Vec<_>>().join(" "));
    }
    if !d.clockless {
        if let (Some(a), Some(b)) = (&d.phi_a, &d.phi_b) {
            let l = a.terms().chain(b.terms()).fold(1i128, |l, (_, c)| num_integer::lcm(l, *c.denom()));
            let scaled = |f: &QuasiPoly| -> Vec<(Monomial, i128)> {
                f.terms()
                    .map(|(m, c)| (m.clone(), (c * Rational::from_integer(l)).to_integer()))
                    .collect()
            };
            let eq = format!("(= {} {})", smt_poly(&scaled(a)), smt_poly(&scaled(b)));
            if d.same_instance.is_empty() {
                let _ = writeln!(s, "(assert {eq})");
            } else {
                let same = conj_text(&d.same_instance);
                let _ = writeln!(s, "(assert (or (not {same}) {eq}))");
            }
        }
    }
    s.push_str("(check-sat)\n(get-model)\n");
    s
}
