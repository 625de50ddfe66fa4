use std::collections::BTreeMap;

use super::{AffineExpr, AffineSet, Conjunction, Constraint};
use crate::lang::{NodeId, NodeTable, Program, StmtKind};

/// Loop bounds and `if` conditions enclosing `node`, with the enclosing
/// iterators renamed by `prefix`. Returns the renamed iterators, outermost first.
pub fn domain_conjunction(table: &NodeTable<'_>, node: NodeId, prefix: &str) -> (Vec<String>, Conjunction) {
    let iters = table.enclosing_iterators(node);
    let rename = |v: &str| {
        if iters.iter().any(|i| i == v) {
            format!("{prefix}{v}")
        } else {
            v.to_string()
        }
    };
    let mut conj = Vec::new();
    for a in table.ancestors(node) {
        match &table.node(a).kind {
            StmtKind::For { iter, lo, hi, .. } => {
                let x = AffineExpr::var(rename(iter));
                conj.push(Constraint::ge(&x, &lo.rename(rename)));
                conj.push(Constraint::le(&x, &hi.rename(rename)));
            }
            StmtKind::If { conds, .. } => conj.extend(conds.iter().map(|c| c.rename(rename))),
            _ => {}
        }
    }
    (iters.iter().map(|i| rename(i)).collect(), conj)
}

/// Iteration domain of a statement under the program's parameter context.
pub fn statement_domain(p: &Program, node: NodeId) -> AffineSet {
    let (vars, conj) = domain_conjunction(&p.table(), node, "");
    AffineSet::from_conjunction(vars, conj).with_context(p.context())
}

/// Concrete iterator valuations of `node` at fixed parameters, in lexicographic order.
pub fn concrete_instances(table: &NodeTable<'_>, node: NodeId, params: &BTreeMap<String, i64>) -> Vec<BTreeMap<String, i64>> {
    fn walk(
        table: &NodeTable<'_>,
        chain: &[NodeId],
        params: &BTreeMap<String, i64>,
        env: &mut BTreeMap<String, i64>,
        out: &mut Vec<BTreeMap<String, i64>>,
    ) {
        let Some((first, rest)) = chain.split_first() else {
            out.push(env.clone());
            return;
        };
        let lookup = |v: &str| env.get(v).or_else(|| params.get(v)).copied();
        match &table.node(*first).kind {
            StmtKind::For { iter, lo, hi, .. } => {
                let (Some(lo), Some(hi)) = (lo.eval_with(lookup), hi.eval_with(lookup)) else { return };
                for x in lo..=hi {
                    env.insert(iter.clone(), x);
                    walk(table, rest, params, env, out);
                }
                env.remove(iter);
            }
            StmtKind::If { conds, .. } => {
                if conds.iter().all(|c| c.holds_with(lookup) == Some(true)) {
                    walk(table, rest, params, env, out);
                }
            }
            _ => walk(table, rest, params, env, out),
        }
    }
    let mut out = Vec::new();
    walk(table, &table.ancestors(node), params, &mut BTreeMap::new(), &mut out);
    out
}
