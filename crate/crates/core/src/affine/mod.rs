//! Integer affine constraint sets: finite unions of conjunctions over named
//! variables, with an exact emptiness test and bounded enumeration.

mod domain;
mod expr;
mod omega;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use domain::{concrete_instances, domain_conjunction, statement_domain};
pub use expr::{AffineExpr, Constraint, ConstraintKind};
pub use omega::{conjunction_emptiness, Emptiness};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AffineError {
    #[error("no bounds given for variable `{0}`")]
    MissingBound(String),
    #[error("path vectors disagree before depth {0}")]
    Misaligned(usize),
}

pub type Conjunction = Vec<Constraint>;

/// A union of conjunctions of affine constraints, under a shared context.
///
/// `variables` lists the dimensions of the set; any other name occurring in a
/// constraint is a symbolic parameter (constrained by `context`). Emptiness is
/// universal: the set is empty iff no valuation of variables and parameters
/// satisfies the context and some disjunct.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AffineSet {
    pub variables: Vec<String>,
    pub disjuncts: Vec<Conjunction>,
    pub context: Conjunction,
}

impl AffineSet {
    pub fn universe(variables: Vec<String>) -> Self {
        AffineSet {
            variables,
            disjuncts: vec![Vec::new()],
            context: Vec::new(),
        }
    }

    pub fn empty(variables: Vec<String>) -> Self {
        AffineSet {
            variables,
            disjuncts: Vec::new(),
            context: Vec::new(),
        }
    }

    pub fn from_conjunction(variables: Vec<String>, conj: Conjunction) -> Self {
        let mut s = AffineSet {
            variables,
            disjuncts: vec![conj],
            context: Vec::new(),
        };
        s.simplify_trivial();
        s
    }

    pub fn with_context(mut self, context: Conjunction) -> Self {
        self.context = context;
        self
    }

    pub fn is_syntactically_empty(&self) -> bool {
        self.disjuncts.is_empty()
    }

    /// Names mentioned anywhere that are not dimensions.
    pub fn parameters(&self) -> BTreeSet<String> {
        let dims: BTreeSet<&str> = self.variables.iter().map(String::as_str).collect();
        self.disjuncts
            .iter()
            .flatten()
            .chain(self.context.iter())
            .flat_map(|c| c.expr.vars())
            .filter(|v| !dims.contains(v))
            .map(str::to_string)
            .collect()
    }

    /// Dimension order used by [`AffineSet::enumerate`]: variables, then parameters sorted.
    pub fn dims(&self) -> Vec<String> {
        let mut d = self.variables.clone();
        d.extend(self.parameters());
        d
    }

    /// Drop constant-true constraints and constant-false disjuncts.
    fn simplify_trivial(&mut self) {
        let mut out = Vec::with_capacity(self.disjuncts.len());
        'outer: for conj in std::mem::take(&mut self.disjuncts) {
            let mut kept = Vec::with_capacity(conj.len());
            for c in conj {
                match c.constant_truth() {
                    Some(true) => {}
                    Some(false) => continue 'outer,
                    None => {
                        if !kept.contains(&c) {
                            kept.push(c)
                        }
                    }
                }
            }
            if !out.contains(&kept) {
                out.push(kept);
            }
        }
        self.disjuncts = out;
    }

    pub fn union(&self, other: &AffineSet) -> AffineSet {
        let mut out = self.clone();
        for v in &other.variables {
            if !out.variables.contains(v) {
                out.variables.push(v.clone());
            }
        }
        for c in &other.context {
            if !out.context.contains(c) {
                out.context.push(c.clone());
            }
        }
        out.disjuncts.extend(other.disjuncts.iter().cloned());
        out.simplify_trivial();
        out
    }

    /// Conjoin a single conjunction into every disjunct.
    pub fn intersect_conj(&self, conj: &[Constraint]) -> AffineSet {
        let mut out = self.clone();
        for d in &mut out.disjuncts {
            d.extend(conj.iter().cloned());
        }
        out.simplify_trivial();
        out
    }

    pub fn intersect(&self, other: &AffineSet) -> AffineSet {
        let mut out = AffineSet::empty(self.variables.clone());
        for v in &other.variables {
            if !out.variables.contains(v) {
                out.variables.push(v.clone());
            }
        }
        out.context = self.context.clone();
        for c in &other.context {
            if !out.context.contains(c) {
                out.context.push(c.clone());
            }
        }
        for a in &self.disjuncts {
            for b in &other.disjuncts {
                let mut d = a.clone();
                d.extend(b.iter().cloned());
                out.disjuncts.push(d);
            }
        }
        out.simplify_trivial();
        out
    }

    /// `self /\ !other`, expanded to disjunctive form. Disjuncts found empty
    /// during the expansion are pruned, which keeps the result small.
    pub fn subtract(&self, other: &AffineSet) -> AffineSet {
        let mut acc = self.clone();
        for v in &other.variables {
            if !acc.variables.contains(v) {
                acc.variables.push(v.clone());
            }
        }
        for d in &other.disjuncts {
            // !(c1 /\ c2 /\ ...) == !c1 \/ (c1 /\ !c2) \/ ...
            let mut next = Vec::new();
            for base in &acc.disjuncts {
                let mut probe = base.clone();
                probe.extend(d.iter().cloned());
                probe.extend(acc.context.iter().cloned());
                if conjunction_emptiness(&probe).is_empty() {
                    if !next.contains(base) {
                        next.push(base.clone());
                    }
                    continue;
                }
                let mut prefix = base.clone();
                for c in d {
                    for lit in c.negate() {
                        let mut cand = prefix.clone();
                        cand.push(lit);
                        let mut probe = cand.clone();
                        probe.extend(acc.context.iter().cloned());
                        if !conjunction_emptiness(&probe).is_empty() && !next.contains(&cand) {
                            next.push(cand);
                        }
                    }
                    prefix.push(c.clone());
                }
            }
            acc.disjuncts = next;
            acc.simplify_trivial();
        }
        acc
    }

    /// Drop constraints implied by the rest of their disjunct and the context.
    pub fn simplify(&self) -> AffineSet {
        let mut out = self.prune();
        let mut seen = Vec::new();
        for d in &out.disjuncts {
            let d = simplify_conjunction(d, &self.context);
            if !seen.contains(&d) {
                seen.push(d);
            }
        }
        out.disjuncts = seen;
        out
    }

    /// Remove disjuncts that are integer-empty under the context.
    pub fn prune(&self) -> AffineSet {
        let mut out = self.clone();
        out.disjuncts.retain(|d| {
            let mut probe = d.clone();
            probe.extend(self.context.iter().cloned());
            !conjunction_emptiness(&probe).is_empty()
        });
        out
    }

    /// Universal emptiness over all variables and parameters satisfying the context.
    pub fn is_empty(&self) -> Emptiness {
        let mut unknown = false;
        for d in &self.disjuncts {
            let mut probe = d.clone();
            probe.extend(self.context.iter().cloned());
            match conjunction_emptiness(&probe) {
                Emptiness::NonEmpty => return Emptiness::NonEmpty,
                Emptiness::Unknown => unknown = true,
                Emptiness::Empty => {}
            }
        }
        if unknown {
            Emptiness::Unknown
        } else {
            Emptiness::Empty
        }
    }

    /// Membership of a full valuation (variables and parameters).
    pub fn contains(&self, point: &BTreeMap<String, i64>) -> bool {
        let ok = |c: &Constraint| c.holds(point).unwrap_or(false);
        self.context.iter().all(ok) && self.disjuncts.iter().any(|d| d.iter().all(ok))
    }

    pub fn contains_with(&self, lookup: &dyn Fn(&str) -> Option<i64>) -> bool {
        let ok = |c: &Constraint| c.holds_with(lookup).unwrap_or(false);
        self.context.iter().all(ok) && self.disjuncts.iter().any(|d| d.iter().all(ok))
    }

    /// Fix some names to values.
    pub fn partial_eval(&self, env: &BTreeMap<String, i64>) -> AffineSet {
        let mut out = AffineSet {
            variables: self.variables.iter().filter(|v| !env.contains_key(*v)).cloned().collect(),
            disjuncts: self
                .disjuncts
                .iter()
                .map(|d| d.iter().map(|c| c.partial_eval(env)).collect())
                .collect(),
            context: Vec::new(),
        };
        let mut ctx = Vec::new();
        for c in &self.context {
            let c = c.partial_eval(env);
            match c.constant_truth() {
                Some(true) => {}
                Some(false) => return AffineSet::empty(out.variables),
                None => ctx.push(c),
            }
        }
        out.context = ctx;
        out.simplify_trivial();
        out
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> AffineSet {
        AffineSet {
            variables: self.variables.iter().map(|v| f(v)).collect(),
            disjuncts: self
                .disjuncts
                .iter()
                .map(|d| d.iter().map(|c| c.rename(f)).collect())
                .collect(),
            context: self.context.iter().map(|c| c.rename(f)).collect(),
        }
    }

    /// All integer points inside `bounds`, in lexicographic order of [`AffineSet::dims`].
    pub fn enumerate(&self, bounds: &BTreeMap<String, (i64, i64)>) -> Result<Vec<Vec<i64>>, AffineError> {
        let dims = self.dims();
        let ranges: Vec<(i64, i64)> = dims
            .iter()
            .map(|d| bounds.get(d).copied().ok_or_else(|| AffineError::MissingBound(d.clone())))
            .collect::<Result<_, _>>()?;
        let pos: BTreeMap<&str, usize> = dims.iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();

        // Each constraint is checked at the depth where its last dimension is assigned.
        let depth_of = |c: &Constraint| c.expr.vars().map(|v| pos[v] + 1).max().unwrap_or(0);
        let ctx_by_depth = bucket(&self.context, dims.len(), depth_of);
        let disj_by_depth: Vec<Vec<Vec<&Constraint>>> = self
            .disjuncts
            .iter()
            .map(|d| bucket(d, dims.len(), depth_of))
            .collect();

        let mut out = Vec::new();
        let mut point = vec![0i64; dims.len()];
        if self.disjuncts.is_empty() {
            return Ok(out);
        }
        let check = |cs: &[&Constraint], point: &[i64]| {
            cs.iter().all(|c| {
                c.holds_with(|v| pos.get(v).map(|&i| point[i]))
                    .unwrap_or(false)
            })
        };
        if !check(&ctx_by_depth[0], &point) {
            return Ok(out);
        }
        let alive: Vec<bool> = disj_by_depth.iter().map(|d| check(&d[0], &point)).collect();
        if alive.iter().any(|&a| a) {
            rec(0, &ranges, &mut point, &alive, &ctx_by_depth, &disj_by_depth, &check, &mut out);
        }
        Ok(out)
    }
}

fn bucket<'a>(cs: &'a [Constraint], n: usize, depth_of: impl Fn(&Constraint) -> usize) -> Vec<Vec<&'a Constraint>> {
    let mut out = vec![Vec::new(); n + 1];
    for c in cs {
        out[depth_of(c)].push(c);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn rec(
    i: usize,
    ranges: &[(i64, i64)],
    point: &mut Vec<i64>,
    alive: &[bool],
    ctx: &[Vec<&Constraint>],
    disj: &[Vec<Vec<&Constraint>>],
    check: &dyn Fn(&[&Constraint], &[i64]) -> bool,
    out: &mut Vec<Vec<i64>>,
) {
    if i == ranges.len() {
        out.push(point.clone());
        return;
    }
    let (lo, hi) = ranges[i];
    for x in lo..=hi {
        point[i] = x;
        if !check(&ctx[i + 1], point) {
            continue;
        }
        let next: Vec<bool> = alive
            .iter()
            .enumerate()
            .map(|(k, &a)| a && check(&disj[k][i + 1], point))
            .collect();
        if next.iter().any(|&a| a) {
            rec(i + 1, ranges, point, &next, ctx, disj, check, out);
        }
    }
}

impl fmt::Display for AffineSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] : ", self.variables.join(", "))?;
        if self.disjuncts.is_empty() {
            return write!(f, "false");
        }
        let parts: Vec<String> = self
            .disjuncts
            .iter()
            .map(|d| {
                if d.is_empty() {
                    "true".to_string()
                } else {
                    d.iter().map(ToString::to_string).collect::<Vec<_>>().join(" and ")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" or "))?;
        if !self.context.is_empty() {
            let ctx: Vec<String> = self.context.iter().map(ToString::to_string).collect();
            write!(f, " | {}", ctx.join(" and "))?;
        }
        Ok(())
    }
}

/// The conjunction `u <<_p v`: components `0..p` equal and component `p` of
/// `u` strictly below that of `v`. `None` when it is constant-false, in
/// particular when `p` is past the end of either vector.
pub fn lex_order(u: &[AffineExpr], v: &[AffineExpr], p: usize) -> Option<Conjunction> {
    if p >= u.len() || p >= v.len() {
        return None;
    }
    let mut conj = Vec::with_capacity(p + 1);
    for k in 0..p {
        conj.push(Constraint::eq(&u[k], &v[k]));
    }
    conj.push(Constraint::lt(&u[p], &v[p]));
    let mut kept = Vec::new();
    for c in conj {
        match c.constant_truth() {
            Some(true) => {}
            Some(false) => return None,
            None => kept.push(c),
        }
    }
    Some(kept)
}

/// `u <<_p v` as a set over the union of both vectors' variables.
pub fn lex_order_set(variables: Vec<String>, u: &[AffineExpr], v: &[AffineExpr], p: usize) -> AffineSet {
    match lex_order(u, v, p) {
        Some(c) => AffineSet::from_conjunction(variables, c),
        None => AffineSet::empty(variables),
    }
}

/// Remove constraints implied by the others (and the context), for display.
pub fn simplify_conjunction(conj: &[Constraint], context: &[Constraint]) -> Conjunction {
    let mut kept: Vec<Constraint> = Vec::new();
    for c in conj {
        if let Some(n) = c.normalized() {
            if n.constant_truth() != Some(true) && !kept.contains(&n) {
                kept.push(n);
            }
        }
    }
    let mut i = 0;
    while i < kept.len() {
        let mut others: Vec<Constraint> = kept
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, c)| c.clone())
            .collect();
        others.extend(context.iter().cloned());
        let c = &kept[i];
        let implied = c.negate().into_iter().all(|lit| {
            let mut probe = others.clone();
            probe.push(lit);
            conjunction_emptiness(&probe).is_empty()
        });
        if implied {
            kept.remove(i);
        } else {
            i += 1;
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: &str) -> AffineExpr {
        AffineExpr::var(n)
    }
    fn k(c: i64) -> AffineExpr {
        AffineExpr::constant(c)
    }
    fn names(ns: &[&str]) -> Vec<String> {
        ns.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn empty_interval() {
        let s = AffineSet::from_conjunction(
            names(&["x"]),
            vec![Constraint::ge(&v("x"), &k(0)), Constraint::le(&v("x"), &k(-1))],
        );
        assert_eq!(s.is_empty(), Emptiness::Empty);
    }

    #[test]
    fn parametric_interval_nonempty() {
        let s = AffineSet::from_conjunction(
            names(&["i"]),
            vec![Constraint::ge(&v("i"), &k(1)), Constraint::le(&v("i"), &v("N").plus_const(-1))],
        )
        .with_context(vec![Constraint::ge(&v("N"), &k(2))]);
        assert_eq!(s.is_empty(), Emptiness::NonEmpty);
        let mut b = BTreeMap::new();
        b.insert("i".to_string(), (0, 5));
        b.insert("N".to_string(), (2, 2));
        assert_eq!(s.enumerate(&b).unwrap(), vec![vec![1, 2]]);
    }

    #[test]
    fn enumerate_box() {
        let s = AffineSet::from_conjunction(
            names(&["x"]),
            vec![Constraint::ge(&v("x"), &k(0)), Constraint::le(&v("x"), &k(2))],
        );
        let mut b = BTreeMap::new();
        b.insert("x".to_string(), (0, 5));
        assert_eq!(s.enumerate(&b).unwrap(), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(AffineSet::empty(names(&["x"])).enumerate(&b).unwrap(), Vec::<Vec<i64>>::new());
        assert_eq!(
            s.enumerate(&BTreeMap::new()),
            Err(AffineError::MissingBound("x".into()))
        );
    }

    #[test]
    fn lex_order_depths() {
        let u = [v("u1"), v("u2")];
        let w = [v("v1"), v("v2")];
        assert_eq!(lex_order(&u, &w, 0).unwrap(), vec![Constraint::lt(&v("u1"), &v("v1"))]);
        assert_eq!(
            lex_order(&u, &w, 1).unwrap(),
            vec![Constraint::eq(&v("u1"), &v("v1")), Constraint::lt(&v("u2"), &v("v2"))]
        );
        assert!(lex_order(&u, &w, 2).is_none());
        // constant components
        assert!(lex_order(&[k(2)], &[k(1)], 0).is_none());
        assert_eq!(lex_order(&[k(1)], &[k(2)], 0).unwrap(), Vec::<Constraint>::new());
    }

    #[test]
    fn subtract_splits_disequalities() {
        let base = AffineSet::from_conjunction(
            names(&["x"]),
            vec![Constraint::ge(&v("x"), &k(0)), Constraint::le(&v("x"), &k(4))],
        );
        let hole = AffineSet::from_conjunction(names(&["x"]), vec![Constraint::eq(&v("x"), &k(2))]);
        let diff = base.subtract(&hole);
        let mut b = BTreeMap::new();
        b.insert("x".to_string(), (-10, 10));
        let pts: Vec<i64> = diff.enumerate(&b).unwrap().into_iter().map(|p| p[0]).collect();
        assert_eq!(pts, vec![0, 1, 3, 4]);
    }

    #[test]
    fn simplification_drops_implied() {
        let c = vec![
            Constraint::ge(&v("i"), &k(1)),
            Constraint::ge(&v("i"), &k(2)),
            Constraint::le(&v("i"), &k(5)),
        ];
        let s = simplify_conjunction(&c, &[]);
        assert_eq!(s, vec![Constraint::ge(&v("i"), &k(2)), Constraint::le(&v("i"), &k(5))]);
    }
}
