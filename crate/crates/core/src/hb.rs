//! Happens-before: path vectors, the incomplete lexicographic order, clock
//! reduction and the clocked order built from phase counts.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::affine::{lex_order, AffineExpr, AffineSet, Conjunction, Constraint};
use crate::lang::{NodeId, NodeTable, Program, StmtKind};
use crate::phi::PhiEntry;
use crate::poly::QuasiPoly;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum HbError {
    #[error("node {0} is not a basic or advance statement")]
    NotLeaf(NodeId),
    #[error("phase functions refer to different clocks (F{0} and F{1})")]
    ClockMismatch(NodeId, NodeId),
    #[error("phase function for node {0} is not validated")]
    Unvalidated(NodeId),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum PathComponent {
    SeqIndex(usize),
    Iter(String),
    AsyncMark,
    FinishMark,
}

impl fmt::Display for PathComponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathComponent::SeqIndex(k) => write!(f, "{k}"),
            PathComponent::Iter(i) => write!(f, "{i}"),
            PathComponent::AsyncMark => write!(f, "a"),
            PathComponent::FinishMark => write!(f, "f"),
        }
    }
}

/// Root-to-node path; `nodes[k]` is the AST node contributing `components[k]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PathVector {
    pub components: Vec<PathComponent>,
    pub nodes: Vec<NodeId>,
}

impl PathVector {
    /// Affine form of each component; marks become the constant 0.
    pub fn exprs(&self, rename: &dyn Fn(&str) -> String) -> Vec<AffineExpr> {
        self.components
            .iter()
            .map(|c| match c {
                PathComponent::SeqIndex(k) => AffineExpr::constant(*k as i64),
                PathComponent::Iter(i) => AffineExpr::var(rename(i)),
                PathComponent::AsyncMark | PathComponent::FinishMark => AffineExpr::zero(),
            })
            .collect()
    }

    pub fn position_of(&self, node: NodeId) -> Option<usize> {
        self.nodes.iter().position(|n| *n == node)
    }
}

impl fmt::Display for PathVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.components.iter().map(|c| c.to_string()).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}

pub(crate) fn path_of(table: &NodeTable<'_>, node: NodeId) -> PathVector {
    let mut pv = PathVector { components: Vec::new(), nodes: Vec::new() };
    let mut chain = table.ancestors(node);
    chain.push(node);
    for w in chain.windows(2) {
        let (a, child) = (w[0], w[1]);
        let comp = match &table.node(a).kind {
            StmtKind::Seq(_) => PathComponent::SeqIndex(table.seq_position(a, child).expect("child of seq")),
            StmtKind::For { iter, .. } => PathComponent::Iter(iter.clone()),
            StmtKind::Async { .. } => PathComponent::AsyncMark,
            StmtKind::Finish { .. } => PathComponent::FinishMark,
            StmtKind::If { .. } => continue,
            StmtKind::Basic(_) | StmtKind::Advance => unreachable!("leaf with children"),
        };
        pv.components.push(comp);
        pv.nodes.push(a);
    }
    pv
}

pub fn path_vector(p: &Program, node: NodeId) -> Result<PathVector, HbError> {
    let t = p.table();
    match t.get(node) {
        Some(s) if s.is_leaf() => Ok(path_of(&t, node)),
        _ => Err(HbError::NotLeaf(node)),
    }
}

/// Prefix renaming for the iterators of one side of a relation.
pub fn prefixer<'a>(table: &'a NodeTable<'_>, node: NodeId, prefix: &'a str) -> impl Fn(&str) -> String + 'a {
    let iters = table.enclosing_iterators(node);
    move |v: &str| {
        if iters.iter().any(|i| i == v) {
            format!("{prefix}{v}")
        } else {
            v.to_string()
        }
    }
}

/// The unclocked happens-before relation between instances of two nodes.
#[derive(Clone, Debug, Serialize)]
pub struct HBRelation {
    pub source: NodeId,
    pub target: NodeId,
    /// Depths at which ordering implies completion before start.
    pub comparable_dims: Vec<usize>,
    /// Over `u_`-prefixed source iterators, `v_`-prefixed target iterators and parameters.
    pub relation: AffineSet,
}

impl HBRelation {
    /// Evaluate at concrete instances.
    pub fn holds(&self, u: &BTreeMap<String, i64>, v: &BTreeMap<String, i64>, params: &BTreeMap<String, i64>) -> bool {
        let lookup = |name: &str| {
            if let Some(x) = name.strip_prefix("u_").and_then(|n| u.get(n)) {
                return Some(*x);
            }
            if let Some(x) = name.strip_prefix("v_").and_then(|n| v.get(n)) {
                return Some(*x);
            }
            params.get(name).copied()
        };
        self.relation.disjuncts.iter().any(|d| d.iter().all(|c| c.holds_with(lookup) == Some(true)))
    }
}

/// Depths `p` where `u <<_p v` is a sound ordering, paired with the node
/// where the two paths are compared.
pub(crate) fn comparable_depths(table: &NodeTable<'_>, u: NodeId, v: NodeId) -> Vec<(usize, NodeId)> {
    let pu = path_of(table, u);
    let pv = path_of(table, v);
    let mut au = table.ancestors(u);
    au.push(u);
    let mut av = table.ancestors(v);
    av.push(v);
    let common = au.iter().zip(av.iter()).take_while(|(a, b)| a == b).count();
    let mut out = Vec::new();
    for j in 0..common {
        let a = au[j];
        let Some(q) = pu.position_of(a) else { continue };
        let candidate = match &table.node(a).kind {
            StmtKind::For { .. } => true,
            StmtKind::Seq(_) if j + 1 == common && u != v => {
                let ku = table.seq_position(a, au[j + 1]);
                let kv = table.seq_position(a, av[j + 1]);
                ku < kv
            }
            _ => false,
        };
        if !candidate {
            continue;
        }
        debug_assert_eq!(pv.position_of(a), Some(q));
        // an async below `a` not joined by a finish below `a` may outlive the successor
        let mut escapes = false;
        for n in &au[j + 1..] {
            match table.node(*n).kind {
                StmtKind::Finish { .. } => break,
                StmtKind::Async { .. } => {
                    escapes = true;
                    break;
                }
                _ => {}
            }
        }
        if !escapes {
            out.push((q, a));
        }
    }
    out
}

/// Relation over `upre`/`vpre`-prefixed iterators, optionally keeping only depths above `min_depth`.
pub(crate) fn relation_between(
    table: &NodeTable<'_>,
    u: NodeId,
    v: NodeId,
    upre: &str,
    vpre: &str,
    min_depth: Option<usize>,
) -> (Vec<usize>, Vec<Conjunction>) {
    let ru = prefixer(table, u, upre);
    let rv = prefixer(table, v, vpre);
    let eu = path_of(table, u).exprs(&ru);
    let ev = path_of(table, v).exprs(&rv);
    let mut dims = Vec::new();
    let mut disjuncts = Vec::new();
    for (p, _) in comparable_depths(table, u, v) {
        if min_depth.is_some_and(|m| p <= m) {
            continue;
        }
        dims.push(p);
        if let Some(c) = lex_order(&eu, &ev, p) {
            disjuncts.push(c);
        }
    }
    (dims, disjuncts)
}

pub(crate) fn hb_between(p: &Program, table: &NodeTable<'_>, u: NodeId, v: NodeId) -> HBRelation {
    let (dims, disjuncts) = relation_between(table, u, v, "u_", "v_", None);
    let mut vars: Vec<String> = table.enclosing_iterators(u).iter().map(|i| format!("u_{i}")).collect();
    vars.extend(table.enclosing_iterators(v).iter().map(|i| format!("v_{i}")));
    let mut relation = AffineSet::empty(vars).with_context(p.context());
    relation.disjuncts = disjuncts;
    HBRelation { source: u, target: v, comparable_dims: dims, relation }
}

pub fn hb_unclocked(p: &Program, u: NodeId, v: NodeId) -> Result<HBRelation, HbError> {
    let t = p.table();
    for n in [u, v] {
        if !t.get(n).is_some_and(|s| s.is_leaf()) {
            return Err(HbError::NotLeaf(n));
        }
    }
    Ok(hb_between(p, &t, u, v))
}

/// The single clock relevant to a pair, with the representative of each side.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClockReduction {
    pub clock: NodeId,
    pub rep_u: NodeId,
    pub rep_v: NodeId,
}

pub(crate) fn reduce_in(table: &NodeTable<'_>, u: NodeId, v: NodeId) -> Option<ClockReduction> {
    let au = table.ancestors(u);
    let av = table.ancestors(v);
    let common = au.iter().zip(av.iter()).take_while(|(a, b)| a == b).count();
    let f = au[..common].iter().rev().find(|a| table.node(**a).is_clocked_finish()).copied()?;
    let rep = |anc: &[NodeId], node: NodeId| {
        let k = anc.iter().position(|a| *a == f).expect("clock is an ancestor");
        anc[k + 1..].iter().find(|a| table.node(**a).is_clocked_finish()).copied().unwrap_or(node)
    };
    Some(ClockReduction { clock: f, rep_u: rep(&au, u), rep_v: rep(&av, v) })
}

pub fn reduce_clock(p: &Program, u: NodeId, v: NodeId) -> Option<ClockReduction> {
    reduce_in(&p.table(), u, v)
}

/// `u <<< v`: same clock instance and a smaller phase, or unclocked order.
#[derive(Clone, Debug, Serialize)]
pub struct ClockedHb {
    pub base: HBRelation,
    pub clock: Option<NodeId>,
    /// Iterators enclosing the clock agree (`u_x = v_x`).
    pub same_instance: Conjunction,
    pub phi_u: Option<QuasiPoly>,
    pub phi_v: Option<QuasiPoly>,
}

impl ClockedHb {
    pub fn holds(&self, u: &BTreeMap<String, i64>, v: &BTreeMap<String, i64>, params: &BTreeMap<String, i64>) -> bool {
        if self.base.holds(u, v, params) {
            return true;
        }
        let (Some(fu), Some(fv)) = (&self.phi_u, &self.phi_v) else { return false };
        let lookup = |name: &str| {
            name.strip_prefix("u_")
                .and_then(|n| u.get(n))
                .or_else(|| name.strip_prefix("v_").and_then(|n| v.get(n)))
                .or_else(|| params.get(name))
                .copied()
        };
        if !self.same_instance.iter().all(|c| c.holds_with(lookup) == Some(true)) {
            return false;
        }
        match (fu.eval_with(&lookup), fv.eval_with(&lookup)) {
            (Some(a), Some(b)) => a < b,
            _ => false,
        }
    }
}

/// Equalities `u_x = v_x` over the iterators enclosing `clock`.
pub fn same_instance_constraints(table: &NodeTable<'_>, clock: NodeId, upre: &str, vpre: &str) -> Conjunction {
    table
        .enclosing_iterators(clock)
        .iter()
        .map(|i| Constraint::eq(&AffineExpr::var(format!("{upre}{i}")), &AffineExpr::var(format!("{vpre}{i}"))))
        .collect()
}

/// Combine the unclocked relation with phase functions of the reduced clock.
pub fn hb_clocked(p: &Program, base: HBRelation, phi_u: &PhiEntry, phi_v: &PhiEntry) -> Result<ClockedHb, HbError> {
    if phi_u.clock != phi_v.clock {
        return Err(HbError::ClockMismatch(phi_u.clock, phi_v.clock));
    }
    let t = p.table();
    let fu = phi_u.poly.as_ref().filter(|_| phi_u.validation.passed).ok_or(HbError::Unvalidated(phi_u.node))?;
    let fv = phi_v.poly.as_ref().filter(|_| phi_v.validation.passed).ok_or(HbError::Unvalidated(phi_v.node))?;
    let ru = prefixer(&t, phi_u.node, "u_");
    let rv = prefixer(&t, phi_v.node, "v_");
    Ok(ClockedHb {
        same_instance: same_instance_constraints(&t, phi_u.clock, "u_", "v_"),
        clock: Some(phi_u.clock),
        phi_u: Some(fu.rename(&ru)),
        phi_v: Some(fv.rename(&rv)),
        base,
    })
}

/// Clocked order for a pair of leaves, falling back to the unclocked order
/// when there is no common clock or a phase function is unavailable.
pub fn clocked_for_pair(p: &Program, table: &crate::phi::PhiTable, u: NodeId, v: NodeId) -> ClockedHb {
    let t = p.table();
    let base = hb_between(p, &t, u, v);
    let fallback = |base| ClockedHb { base, clock: None, same_instance: Vec::new(), phi_u: None, phi_v: None };
    let Some(r) = reduce_in(&t, u, v) else { return fallback(base) };
    match (table.get(r.rep_u, r.clock), table.get(r.rep_v, r.clock)) {
        (Some(a), Some(b)) => match hb_clocked(p, base.clone(), a, b) {
            Ok(c) => c,
            Err(_) => fallback(base),
        },
        _ => fallback(base),
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

    #[test]
    fn jacobi_path_vector() {
        let p = load(JACOBI).unwrap();
        let s0 = p.table().basics()[0].id;
        assert_eq!(path_vector(&p, s0).unwrap().to_string(), "[f, 1, i, a, 1, t, 1]");
        assert!(path_vector(&p, NodeId(0)).is_err());
    }

    #[test]
    fn same_activity_ordered() {
        let p = load(JACOBI).unwrap();
        let b = p.table().basics().iter().map(|s| s.id).collect::<Vec<_>>();
        let r = hb_unclocked(&p, b[0], b[1]).unwrap();
        let prm = bt(&[("N", 4), ("T", 3)]);
        assert!(r.holds(&bt(&[("i", 1), ("t", 0)]), &bt(&[("i", 1), ("t", 0)]), &prm));
        assert!(r.holds(&bt(&[("i", 1), ("t", 0)]), &bt(&[("i", 1), ("t", 2)]), &prm));
        assert!(!r.holds(&bt(&[("i", 1), ("t", 1)]), &bt(&[("i", 1), ("t", 0)]), &prm));
        // different activities are unordered
        assert!(!r.holds(&bt(&[("i", 1), ("t", 0)]), &bt(&[("i", 2), ("t", 3)]), &prm));
    }

    #[test]
    fn finish_closes_async() {
        let p = load("array A[0]; { finish async A = f(); A = g(); }").unwrap();
        let b = p.table().basics().iter().map(|s| s.id).collect::<Vec<_>>();
        assert_eq!(hb_unclocked(&p, b[0], b[1]).unwrap().comparable_dims.len(), 1);
        let p = load("array A[0]; { async A = f(); A = g(); }").unwrap();
        let b = p.table().basics().iter().map(|s| s.id).collect::<Vec<_>>();
        assert!(hb_unclocked(&p, b[0], b[1]).unwrap().relation.disjuncts.is_empty());
        // the later statement may still precede nothing: spawned after u completes
        assert_eq!(hb_unclocked(&p, b[1], b[0]).unwrap().relation.disjuncts.len(), 0);
    }

    #[test]
    fn clock_reduction() {
        let p = load(JACOBI).unwrap();
        let b = p.table().basics().iter().map(|s| s.id).collect::<Vec<_>>();
        let r = reduce_clock(&p, b[0], b[1]).unwrap();
        assert_eq!((r.clock, r.rep_u, r.rep_v), (NodeId(0), b[0], b[1]));

        let p = load(
            "array A[0]; array B[0];
             clocked finish { clocked async clocked finish A = f(); clocked async clocked finish B = g(); }",
        )
        .unwrap();
        let t = p.table();
        let b = t.basics().iter().map(|s| s.id).collect::<Vec<_>>();
        let r = reduce_clock(&p, b[0], b[1]).unwrap();
        assert_eq!(r.clock, NodeId(0));
        assert!(t.node(r.rep_u).is_clocked_finish() && t.node(r.rep_v).is_clocked_finish());
        assert_ne!(r.rep_u, r.rep_v);

        let p = load("array A[0]; { A = f(); A = g(); }").unwrap();
        let b = p.table().basics().iter().map(|s| s.id).collect::<Vec<_>>();
        assert!(reduce_clock(&p, b[0], b[1]).is_none());
    }
}
