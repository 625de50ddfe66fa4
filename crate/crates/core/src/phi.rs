//! Phase functions: the number of advances of a clock that happen before a
//! statement instance, as closed-form polynomials.
//!
//! Counting sums over loop-structured constraint sets one variable at a time,
//! innermost first. Every result is checked against brute-force counts; sets
//! that do not fit the summation scheme are reported, never approximated.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::affine::{
    concrete_instances, conjunction_emptiness, domain_conjunction, AffineSet, Conjunction, Constraint, Emptiness,
};
use crate::hb::{path_of, reduce_in, relation_between};
use crate::lang::{governing_in, NodeId, NodeTable, Program, StmtKind};
use crate::poly::{QuasiPoly, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum PhiError {
    #[error("node {0} is not a clocked finish")]
    NotAClock(NodeId),
    #[error("node {0} is not inside clock F{1}")]
    NotUnderClock(NodeId, NodeId),
    #[error("bound on `{0}` has a non-unit coefficient")]
    NonUnit(String),
    #[error("`{0}` is unbounded in the counting set")]
    Unbounded(String),
    #[error("count is piecewise: {0}")]
    Piecewise(String),
    #[error("chamber splitting exceeded its depth limit")]
    TooManyChambers,
    #[error("instance {0:?} is outside the statement domain")]
    OutsideDomain(BTreeMap<String, i64>),
}

/// Outcome of checking a phase function against brute-force counts.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PhiValidation {
    pub samples: usize,
    pub passed: bool,
    /// No in-domain point existed for any sampled parameters.
    pub vacuous: bool,
    pub mismatch: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PhiEntry {
    pub node: NodeId,
    pub clock: NodeId,
    #[serde(serialize_with = "ser_poly")]
    pub poly: Option<QuasiPoly>,
    pub validation: PhiValidation,
    pub error: Option<String>,
}

fn ser_poly<S: serde::Serializer>(p: &Option<QuasiPoly>, s: S) -> Result<S::Ok, S::Error> {
    match p {
        Some(p) => s.serialize_str(&p.to_string()),
        None => s.serialize_none(),
    }
}

impl PhiEntry {
    pub fn usable(&self) -> Option<&QuasiPoly> {
        self.poly.as_ref().filter(|_| self.validation.passed)
    }
}

/// Advance statements governed by `clock`, each with its domain.
pub fn advance_domain(p: &Program, clock: NodeId) -> Vec<(NodeId, AffineSet)> {
    let t = p.table();
    advances_of(&t, clock)
        .into_iter()
        .map(|a| {
            let (vars, conj) = domain_conjunction(&t, a, "");
            (a, AffineSet::from_conjunction(vars, conj).with_context(p.context()))
        })
        .collect()
}

fn advances_of(t: &NodeTable<'_>, clock: NodeId) -> Vec<NodeId> {
    t.advances().iter().map(|s| s.id).filter(|a| governing_in(t, *a) == Some(clock)).collect()
}

fn check_clock(t: &NodeTable<'_>, node: NodeId, clock: NodeId) -> Result<usize, PhiError> {
    if !t.get(clock).is_some_and(|s| s.is_clocked_finish()) {
        return Err(PhiError::NotAClock(clock));
    }
    if !t.is_ancestor(clock, node) {
        return Err(PhiError::NotUnderClock(node, clock));
    }
    Ok(path_of(t, node).position_of(clock).expect("clock on path"))
}

struct Piece {
    poly: QuasiPoly,
    conj: Conjunction,
}

fn empty(conj: &[Constraint]) -> bool {
    conjunction_emptiness(conj) == Emptiness::Empty
}

fn implied(c: &Constraint, ctx: &[Constraint]) -> bool {
    c.negate().into_iter().all(|lit| {
        let mut probe = ctx.to_vec();
        probe.push(lit);
        empty(&probe)
    })
}

const MAX_SPLITS: usize = 32;

/// Sum `integrand` over all integer values of `vars` satisfying `conj`,
/// returning guarded pieces over the remaining (fixed) variables.
fn count(
    mut conj: Conjunction,
    mut vars: Vec<String>,
    fixed: &[Constraint],
    mut integrand: QuasiPoly,
    splits: usize,
) -> Result<Vec<Piece>, PhiError> {
    if splits > MAX_SPLITS {
        return Err(PhiError::TooManyChambers);
    }
    // eliminate equalities on summed variables
    while let Some(k) = conj.iter().position(|c| c.is_equality() && vars.iter().any(|v| c.mentions(v))) {
        let c = conj.remove(k);
        let Some(v) = vars.iter().rev().find(|v| c.expr.coeff(v).abs() == 1).cloned() else {
            let v = vars.iter().find(|v| c.mentions(v)).unwrap();
            return Err(PhiError::NonUnit(v.clone()));
        };
        let a = c.expr.coeff(&v);
        let mut rest = c.expr.clone();
        rest.terms.remove(&v);
        // a*v + rest = 0  =>  v = -rest / a
        let value = rest.scale(-a);
        conj = conj.iter().map(|x| x.substitute(&v, &value)).collect();
        integrand = integrand.substitute(&v, &QuasiPoly::from_affine(&value));
        vars.retain(|x| *x != v);
    }
    let mut probe = conj.clone();
    probe.extend_from_slice(fixed);
    if empty(&probe) {
        return Ok(Vec::new());
    }
    let Some(v) = vars.pop() else {
        return Ok(vec![Piece { poly: integrand, conj }]);
    };
    let (with_v, others): (Vec<Constraint>, Vec<Constraint>) = conj.into_iter().partition(|c| c.mentions(&v));
    let mut lowers = Vec::new();
    let mut uppers = Vec::new();
    for c in &with_v {
        let a = c.expr.coeff(&v);
        let mut rest = c.expr.clone();
        rest.terms.remove(&v);
        match a {
            1 => lowers.push(rest.scale(-1)),
            -1 => uppers.push(rest),
            _ => return Err(PhiError::NonUnit(v)),
        }
    }
    if lowers.is_empty() || uppers.is_empty() {
        return Err(PhiError::Unbounded(v));
    }
    let mut ctx = others.clone();
    ctx.extend_from_slice(fixed);

    // pick the binding bound on each side, splitting into chambers when undecided
    for (bounds, is_lower) in [(&lowers, true), (&uppers, false)] {
        if bounds.len() < 2 {
            continue;
        }
        let dominates = |j: usize, k: usize| {
            let c = if is_lower {
                Constraint::ge(&bounds[j], &bounds[k])
            } else {
                Constraint::le(&bounds[j], &bounds[k])
            };
            implied(&c, &ctx)
        };
        if (0..bounds.len()).any(|j| (0..bounds.len()).all(|k| j == k || dominates(j, k))) {
            continue;
        }
        let k = (1..bounds.len()).find(|&k| !dominates(0, k)).unwrap();
        let (first, second) = if is_lower {
            (Constraint::ge(&bounds[0], &bounds[k]), Constraint::ge(&bounds[k], &bounds[0].plus_const(1)))
        } else {
            (Constraint::le(&bounds[0], &bounds[k]), Constraint::le(&bounds[k], &bounds[0].plus_const(-1)))
        };
        let mut out = Vec::new();
        for extra in [first, second] {
            let mut c = with_v.clone();
            c.extend(others.iter().cloned());
            c.push(extra);
            let mut vs = vars.clone();
            vs.push(v.clone());
            out.extend(count(c, vs, fixed, integrand.clone(), splits + 1)?);
        }
        return Ok(out);
    }
    let pick = |bounds: &[crate::affine::AffineExpr], is_lower: bool| {
        let n = bounds.len();
        let j = (0..n)
            .find(|&j| {
                (0..n).all(|k| {
                    j == k || {
                        let c = if is_lower {
                            Constraint::ge(&bounds[j], &bounds[k])
                        } else {
                            Constraint::le(&bounds[j], &bounds[k])
                        };
                        implied(&c, &ctx)
                    }
                })
            })
            .unwrap_or(0);
        bounds[j].clone()
    };
    let lo = pick(&lowers, true);
    let hi = pick(&uppers, false);
    let summed = integrand.sum_over(&v, &QuasiPoly::from_affine(&lo), &QuasiPoly::from_affine(&hi));
    let guard = Constraint::ge(&hi, &lo.plus_const(-1));
    let mut rest = others;
    if !implied(&guard, &ctx) {
        let mut probe = ctx.clone();
        probe.push(guard.clone());
        if empty(&probe) {
            return Ok(Vec::new());
        }
        rest.push(guard);
    }
    count(rest, vars, fixed, summed, splits)
}

/// Closed form for the number of advances of `clock` that happen before
/// an instance of `node`, over `node`'s iterators and the parameters.
pub fn phi_symbolic(p: &Program, node: NodeId, clock: NodeId) -> Result<QuasiPoly, PhiError> {
    let t = p.table();
    let pf = check_clock(&t, node, clock)?;
    let (_, xconj) = domain_conjunction(&t, node, "");
    let mut fixed = xconj;
    fixed.extend(p.context());
    let mut total = QuasiPoly::zero();
    for a in advances_of(&t, clock) {
        let (avars, aconj) = domain_conjunction(&t, a, "@");
        let (_, disjuncts) = relation_between(&t, a, node, "@", "", Some(pf));
        for d in disjuncts {
            let mut conj = aconj.clone();
            conj.extend(d);
            for piece in count(conj, avars.clone(), &fixed, QuasiPoly::int(1), 0)? {
                if piece.conj.iter().all(|c| implied(c, &fixed)) {
                    total = total + piece.poly;
                } else {
                    let mut probe = piece.conj.clone();
                    probe.extend(fixed.iter().cloned());
                    if !empty(&probe) {
                        let guard: Vec<String> = piece.conj.iter().map(|c| c.to_string()).collect();
                        return Err(PhiError::Piecewise(guard.join(" and ")));
                    }
                }
            }
        }
    }
    Ok(total)
}

/// Brute-force count of advances of `clock` before one instance of `node`.
pub fn count_concrete(
    p: &Program,
    node: NodeId,
    iters: &BTreeMap<String, i64>,
    clock: NodeId,
    params: &BTreeMap<String, i64>,
) -> Result<u64, PhiError> {
    let t = p.table();
    check_clock(&t, node, clock)?;
    Counter::new(&t, node, clock).count(iters, params)
}

/// Pre-built relations for repeated concrete counts.
struct Counter<'a> {
    table: &'a NodeTable<'a>,
    domain: Conjunction,
    outer: Vec<String>,
    advances: Vec<(NodeId, Vec<Conjunction>)>,
}

impl<'a> Counter<'a> {
    fn new(table: &'a NodeTable<'a>, node: NodeId, clock: NodeId) -> Self {
        let (_, domain) = domain_conjunction(table, node, "");
        let advances = advances_of(table, clock)
            .into_iter()
            .map(|a| (a, relation_between(table, a, node, "u_", "v_", None).1))
            .collect();
        Counter { table, domain, outer: table.enclosing_iterators(clock), advances }
    }

    fn count(&self, iters: &BTreeMap<String, i64>, params: &BTreeMap<String, i64>) -> Result<u64, PhiError> {
        let lookup = |v: &str| iters.get(v).or_else(|| params.get(v)).copied();
        if !self.domain.iter().all(|c| c.holds_with(lookup) == Some(true)) {
            return Err(PhiError::OutsideDomain(iters.clone()));
        }
        let mut n = 0u64;
        for (a, rel) in &self.advances {
            for inst in concrete_instances(self.table, *a, params) {
                if self.outer.iter().any(|x| inst.get(x) != iters.get(x)) {
                    continue;
                }
                let lk = |name: &str| {
                    name.strip_prefix("u_")
                        .and_then(|x| inst.get(x))
                        .or_else(|| name.strip_prefix("v_").and_then(|x| iters.get(x)))
                        .or_else(|| params.get(name))
                        .copied()
                };
                if rel.iter().any(|d| d.iter().all(|c| c.holds_with(lk) == Some(true))) {
                    n += 1;
                }
            }
        }
        Ok(n)
    }
}

/// Parameter values from max(lower bound, 1) to `span` above it.
fn param_grid(p: &Program, span: i64) -> Vec<BTreeMap<String, i64>> {
    let ranges: Vec<(String, i64, i64)> = p
        .params
        .iter()
        .map(|prm| {
            let lo = prm.min.max(1);
            (prm.name.clone(), lo, lo + span)
        })
        .collect();
    let mut out = vec![BTreeMap::new()];
    for (name, lo, hi) in &ranges {
        // keep the grid small when there are many parameters
        let values: Vec<i64> = if ranges.len() > 2 { vec![*lo, lo + 1, (lo + hi) / 2, *hi] } else { (*lo..=*hi).collect() };
        out = out
            .into_iter()
            .flat_map(|m| {
                values.iter().map(move |x| {
                    let mut m = m.clone();
                    m.insert(name.clone(), *x);
                    m
                })
            })
            .collect();
    }
    out
}

type Point = (BTreeMap<String, i64>, BTreeMap<String, i64>);

/// In-domain instances per parameter point, split into corners and the rest.
fn collect_points(t: &NodeTable<'_>, node: NodeId, grid: &[BTreeMap<String, i64>], corners: &mut Vec<Point>, rest: &mut Vec<Point>) {
    for params in grid {
        let insts = concrete_instances(t, node, params);
        if insts.is_empty() {
            continue;
        }
        let mut is_corner = vec![false; insts.len()];
        is_corner[0] = true;
        *is_corner.last_mut().unwrap() = true;
        for x in t.enclosing_iterators(node) {
            let key = |k: &usize| insts[*k][&x];
            if let Some(k) = (0..insts.len()).min_by_key(key) {
                is_corner[k] = true;
            }
            if let Some(k) = (0..insts.len()).max_by_key(key) {
                is_corner[k] = true;
            }
        }
        for (k, inst) in insts.into_iter().enumerate() {
            if is_corner[k] {
                corners.push((params.clone(), inst));
            } else {
                rest.push((params.clone(), inst));
            }
        }
    }
}

/// Compare `poly` with brute-force counts on sampled in-domain points.
/// Corners of each sampled domain are always included.
pub fn validate_phi(poly: &QuasiPoly, p: &Program, node: NodeId, clock: NodeId, sample_budget: usize) -> PhiValidation {
    let budget = sample_budget.max(20);
    let t = p.table();
    if let Err(e) = check_clock(&t, node, clock) {
        return PhiValidation { mismatch: Some(e.to_string()), ..Default::default() };
    }
    let counter = Counter::new(&t, node, clock);
    let mut corners = Vec::new();
    let mut rest = Vec::new();
    // widen the grid until thin domains yield enough points
    for span in [5, 8, 11, 14] {
        corners.clear();
        rest.clear();
        collect_points(&t, node, &param_grid(p, span), &mut corners, &mut rest);
        if corners.len() + rest.len() >= 20 || p.params.is_empty() {
            break;
        }
    }
    if corners.is_empty() {
        return PhiValidation { samples: 0, passed: true, vacuous: true, mismatch: None };
    }
    let want = budget.max(200).saturating_sub(corners.len());
    let stride = if want == 0 { usize::MAX } else { rest.len().div_ceil(want).max(1) };
    let chosen = corners.iter().chain(rest.iter().step_by(stride.min(rest.len().max(1))).take(want));
    let mut samples = 0;
    for (params, inst) in chosen {
        samples += 1;
        let mut env = inst.clone();
        env.extend(params.iter().map(|(k, v)| (k.clone(), *v)));
        let expected = match counter.count(inst, params) {
            Ok(n) => n,
            Err(e) => return PhiValidation { samples, passed: false, vacuous: false, mismatch: Some(e.to_string()) },
        };
        let got = poly.eval(&env);
        if got != Some(Rational::from_integer(expected as i128)) {
            let shown = got.map(|g| g.to_string()).unwrap_or_else(|| "undefined".into());
            return PhiValidation {
                samples,
                passed: false,
                vacuous: false,
                mismatch: Some(format!("at {env:?}: polynomial gives {shown}, count is {expected}")),
            };
        }
    }
    PhiValidation { samples, passed: samples >= 20.min(corners.len() + rest.len()), vacuous: false, mismatch: None }
}

/// Phase functions keyed by (statement or representative finish, clock).
#[derive(Clone, Debug, Default, Serialize)]
pub struct PhiTable {
    pub entries: BTreeMap<String, PhiEntry>,
}

fn key(node: NodeId, clock: NodeId) -> String {
    format!("{node}@F{clock}")
}

impl PhiTable {
    pub fn get(&self, node: NodeId, clock: NodeId) -> Option<&PhiEntry> {
        self.entries.get(&key(node, clock))
    }

    pub fn insert(&mut self, e: PhiEntry) {
        self.entries.insert(key(e.node, e.clock), e);
    }

    /// Entries needed for every pair of basic statements sharing a clock.
    pub fn build(p: &Program, sample_budget: usize) -> PhiTable {
        let t = p.table();
        let basics: Vec<NodeId> = t.basics().iter().map(|s| s.id).collect();
        let mut wanted = Vec::new();
        for &u in &basics {
            for &v in &basics {
                if let Some(r) = reduce_in(&t, u, v) {
                    for w in [(r.rep_u, r.clock), (r.rep_v, r.clock)] {
                        if !wanted.contains(&w) {
                            wanted.push(w);
                        }
                    }
                }
            }
        }
        let entries: Vec<PhiEntry> = wanted
            .par_iter()
            .map(|&(node, clock)| compute_entry(p, node, clock, sample_budget))
            .collect();
        let mut table = PhiTable::default();
        for e in entries {
            table.insert(e);
        }
        table
    }
}

pub fn compute_entry(p: &Program, node: NodeId, clock: NodeId, sample_budget: usize) -> PhiEntry {
    match phi_symbolic(p, node, clock) {
        Ok(poly) => {
            let validation = validate_phi(&poly, p, node, clock, sample_budget);
            PhiEntry { node, clock, poly: Some(poly), validation, error: None }
        }
        Err(e) => PhiEntry { node, clock, poly: None, validation: PhiValidation::default(), error: Some(e.to_string()) },
    }
}

/// Label used in reports: statement label or `F<id>` for a finish node.
pub fn entry_label(t: &NodeTable<'_>, node: NodeId) -> String {
    match t.node(node).kind {
        StmtKind::Basic(_) | StmtKind::Advance => t.label(node),
        _ => format!("F{node}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::load;

    fn bt(kv: &[(&str, i64)]) -> BTreeMap<String, i64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    const JACOBI: &str = "
param N >= 2; param T >= 0;
array A[1]; array B[1];
clocked finish { for (i = 1 : N - 1) clocked async { for (t = 0 : T) {
  B[i] = S0(A[i-1], A[i], A[i+1]);
  advance;
  A[i] = S1(B[i-1], B[i], B[i+1]);
  advance;
} } }";

    const GAUSS_SEIDEL: &str = "
param N >= 2; param T >= 0;
array A[1];
clocked finish { for (i = 1 : N - 1) {
  clocked async { for (t = 0 : T) {
    advance;
    A[i] = S0(A[i-1], A[i], A[i+1]);
    advance;
  } }
  advance;
} }";

    const QR: &str = "
param N >= 2;
array M[2];
clocked finish { for (j = 0 : N - 1) clocked async { for (k = 0 : N - 2) { for (i = 0 : N - 2 - k) { if (j >= k) {
  M[N-i-1][j] = S0(M[N-i-1][j], M[N-i-2][j], M[N-i-1][k], M[N-i-2][k]);
  M[N-i-2][j] = S1(M[N-i-1][j], M[N-i-2][j], M[N-i-1][k], M[N-i-2][k]);
  advance;
} } } } }";

    fn basics(p: &Program) -> Vec<NodeId> {
        p.table().basics().iter().map(|s| s.id).collect()
    }

    #[test]
    fn jacobi_phi() {
        let p = load(JACOBI).unwrap();
        let b = basics(&p);
        assert_eq!(phi_symbolic(&p, b[0], NodeId(0)).unwrap().to_string(), "2*t");
        assert_eq!(phi_symbolic(&p, b[1], NodeId(0)).unwrap().to_string(), "2*t + 1");
        assert_eq!(count_concrete(&p, b[0], &bt(&[("i", 1), ("t", 3)]), NodeId(0), &bt(&[("N", 2), ("T", 5)])), Ok(6));
        assert_eq!(count_concrete(&p, b[0], &bt(&[("i", 1), ("t", 0)]), NodeId(0), &bt(&[("N", 2), ("T", 5)])), Ok(0));
        let v = validate_phi(&phi_symbolic(&p, b[0], NodeId(0)).unwrap(), &p, b[0], NodeId(0), 20);
        assert!(v.passed && v.samples >= 20, "{v:?}");
        let bad = QuasiPoly::var("t").scale(Rational::from_integer(2)) + QuasiPoly::int(1);
        assert!(!validate_phi(&bad, &p, b[0], NodeId(0), 20).passed);
    }

    #[test]
    fn gauss_seidel_phi() {
        let p = load(GAUSS_SEIDEL).unwrap();
        let b = basics(&p);
        assert_eq!(phi_symbolic(&p, b[0], NodeId(0)).unwrap().to_string(), "i + 2*t");
        assert_eq!(count_concrete(&p, b[0], &bt(&[("i", 2), ("t", 1)]), NodeId(0), &bt(&[("N", 4), ("T", 2)])), Ok(4));
    }

    #[test]
    fn qr_phi() {
        let p = load(QR).unwrap();
        let b = basics(&p);
        for s in &b {
            let f = phi_symbolic(&p, *s, NodeId(0)).unwrap();
            assert_eq!(f.to_string(), "N*k + i - (1/2)*k^2 - (1/2)*k");
            let v = validate_phi(&f, &p, *s, NodeId(0), 20);
            assert!(v.passed, "{v:?}");
        }
    }

    #[test]
    fn advance_domains() {
        let p = load(JACOBI).unwrap();
        assert_eq!(advance_domain(&p, NodeId(0)).len(), 2);
        let p = load("array A[0]; clocked finish A = f();").unwrap();
        assert!(advance_domain(&p, NodeId(0)).is_empty());
        assert_eq!(phi_symbolic(&p, NodeId(1), NodeId(0)).unwrap(), QuasiPoly::zero());
    }
}
