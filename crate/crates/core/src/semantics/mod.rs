//! Small-step interpreter with exhaustive interleaving exploration.
//!
//! The heap is not modelled: a basic statement just records its instance.
//! Exploration memoizes residual terms, so each distinct configuration is
//! expanded once.

mod term;

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;

use fixedbitset::FixedBitSet;
use serde::Serialize;
use thiserror::Error;

pub use term::Term;

use crate::lang::{classify, AccessMode, NodeId, NodeTable, Program, Stmt, StmtKind, SyncClass};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SemanticsError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("exploration incomplete: more than {limit} states")]
    StateLimit { limit: usize },
    #[error("exploration incomplete: more than {limit} traces")]
    TraceLimit { limit: u128 },
    #[error("inconsistent semantics: {0}")]
    Inconsistent(String),
}

impl SemanticsError {
    pub fn is_incomplete(&self) -> bool {
        matches!(self, SemanticsError::StateLimit { .. } | SemanticsError::TraceLimit { .. })
    }
}

/// A statement instance: node plus values of its enclosing iterators.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct InstanceId {
    pub node: NodeId,
    pub label: String,
    pub iters: BTreeMap<String, i64>,
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let vals: Vec<String> = self.iters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        write!(f, "{}<{}>", self.label, vals.join(","))
    }
}

/// A dynamic clock: a clocked finish node executed under some iterator values.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ClockInstance {
    pub node: NodeId,
    pub iters: BTreeMap<String, i64>,
}

impl fmt::Display for ClockInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F{}", self.node)?;
        if !self.iters.is_empty() {
            let vals: Vec<String> = self.iters.iter().map(|(k, v)| format!("{k}={v}")).collect();
            write!(f, "<{}>", vals.join(","))?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum TraceEvent {
    BasicExec { instance: InstanceId },
    ClockStep { clock: ClockInstance, seq_no: u32 },
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::BasicExec { instance } => {
                write!(f, "exec {}", instance.label)?;
                for (k, v) in &instance.iters {
                    write!(f, " {k}={v}")?;
                }
                Ok(())
            }
            TraceEvent::ClockStep { clock, seq_no } => write!(f, "clockstep {clock} #{seq_no}"),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Limits {
    pub max_states: usize,
    pub max_traces: Option<u128>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_states: 1_000_000, max_traces: None }
    }
}

#[derive(Clone, Debug)]
enum Edge {
    Exec { inst: u32, phases: Vec<(u32, u32)> },
    Clock { clock: u32, seq_no: u32, advances: u64 },
}

/// A program instantiated at concrete parameter values.
pub struct Machine<'p> {
    table: NodeTable<'p>,
    params: BTreeMap<String, i64>,
    instances: Vec<InstanceId>,
    index: HashMap<(NodeId, Vec<i64>), u32>,
    clocks: RefCell<Vec<ClockInstance>>,
    clock_index: RefCell<HashMap<ClockInstance, u32>>,
    root: &'p Stmt,
}

impl<'p> Machine<'p> {
    pub fn new(program: &'p Program, params: &BTreeMap<String, i64>) -> Result<Self, SemanticsError> {
        program.check_params(params).map_err(SemanticsError::Params)?;
        let params: BTreeMap<String, i64> = program
            .params
            .iter()
            .map(|p| (p.name.clone(), params[&p.name]))
            .collect();
        let mut m = Machine {
            table: program.table(),
            params,
            instances: Vec::new(),
            index: HashMap::new(),
            clocks: RefCell::new(Vec::new()),
            clock_index: RefCell::new(HashMap::new()),
            root: &program.root,
        };
        let mut env = Vec::new();
        m.enumerate(&program.root, &mut env);
        Ok(m)
    }

    pub fn params(&self) -> &BTreeMap<String, i64> {
        &self.params
    }

    pub fn instances(&self) -> &[InstanceId] {
        &self.instances
    }

    fn lookup<'a>(&'a self, env: &'a BTreeMap<String, i64>) -> impl Fn(&str) -> Option<i64> + 'a {
        move |v| env.get(v).or_else(|| self.params.get(v)).copied()
    }

    fn eval(&self, e: &crate::affine::AffineExpr, env: &BTreeMap<String, i64>) -> i64 {
        e.eval_with(self.lookup(env)).expect("affine expression over unbound variable")
    }

    fn enumerate(&mut self, s: &'p Stmt, env: &mut Vec<(String, i64)>) {
        match &s.kind {
            StmtKind::Basic(_) => {
                let key = (s.id, env.iter().map(|x| x.1).collect::<Vec<_>>());
                let id = InstanceId {
                    node: s.id,
                    label: self.table.label(s.id),
                    iters: env.iter().cloned().collect(),
                };
                self.index.insert(key, self.instances.len() as u32);
                self.instances.push(id);
            }
            StmtKind::Advance => {}
            StmtKind::Seq(items) => items.iter().for_each(|x| self.enumerate(x, env)),
            StmtKind::For { iter, lo, hi, body } => {
                let map: BTreeMap<String, i64> = env.iter().cloned().collect();
                let (lo, hi) = (self.eval(lo, &map), self.eval(hi, &map));
                for x in lo..=hi {
                    env.push((iter.clone(), x));
                    self.enumerate(body, env);
                    env.pop();
                }
            }
            StmtKind::If { conds, body } => {
                let map: BTreeMap<String, i64> = env.iter().cloned().collect();
                if conds.iter().all(|c| c.holds_with(self.lookup(&map)) == Some(true)) {
                    self.enumerate(body, env);
                }
            }
            StmtKind::Async { body, .. } | StmtKind::Finish { body, .. } => self.enumerate(body, env),
        }
    }

    fn instance_of(&self, node: NodeId, env: &BTreeMap<String, i64>) -> u32 {
        let vals: Vec<i64> = self.table.enclosing_iterators(node).iter().map(|i| env[i]).collect();
        self.index[&(node, vals)]
    }

    fn clock_of(&self, node: NodeId, env: &BTreeMap<String, i64>) -> u32 {
        let iters: BTreeMap<String, i64> = self
            .table
            .enclosing_iterators(node)
            .into_iter()
            .map(|i| {
                let v = env[&i];
                (i, v)
            })
            .collect();
        let ci = ClockInstance { node, iters };
        let mut idx = self.clock_index.borrow_mut();
        if let Some(&k) = idx.get(&ci) {
            return k;
        }
        let mut clocks = self.clocks.borrow_mut();
        let k = clocks.len() as u32;
        clocks.push(ci.clone());
        idx.insert(ci, k);
        k
    }

    fn clock(&self, k: u32) -> ClockInstance {
        self.clocks.borrow()[k as usize].clone()
    }

    fn expand(&self, s: &Stmt, env: &Rc<BTreeMap<String, i64>>) -> Term {
        match &s.kind {
            StmtKind::Basic(_) => Term::Exec(self.instance_of(s.id, env)),
            StmtKind::Advance => Term::Advance,
            StmtKind::Seq(items) => {
                let mut it = items.iter().rev();
                match it.next() {
                    None => Term::Skip,
                    Some(last) => it.fold(self.expand(last, env), |acc, x| Term::seq(self.expand(x, env), acc)),
                }
            }
            StmtKind::For { lo, hi, body, .. } => Term::Loop {
                node: s.id,
                env: env.clone(),
                next: self.eval(lo, env),
                hi: self.eval(hi, env),
                async_body: classify(body) == SyncClass::Async,
            },
            StmtKind::If { conds, body } => {
                if conds.iter().all(|c| c.holds_with(self.lookup(env)) == Some(true)) {
                    self.expand(body, env)
                } else {
                    Term::Skip
                }
            }
            StmtKind::Async { body, .. } => Term::async_(self.expand(body, env)),
            StmtKind::Finish { clocked, body } => {
                let clock = clocked.then(|| self.clock_of(s.id, env));
                Term::finish(clock, self.expand(body, env))
            }
        }
    }

    /// Collapse skips and unroll loops at activated positions.
    fn norm(&self, t: &Rc<Term>) -> Rc<Term> {
        match t.as_ref() {
            Term::Seq(a, b) => {
                let a2 = self.norm(a);
                if *a2 == Term::Skip {
                    return self.norm(b);
                }
                if a2.is_async() {
                    let b2 = self.norm(b);
                    if *b2 == Term::Skip {
                        return a2;
                    }
                    Rc::new(Term::Seq(a2, b2))
                } else if Rc::ptr_eq(&a2, a) {
                    t.clone()
                } else {
                    Rc::new(Term::Seq(a2, b.clone()))
                }
            }
            Term::Async(a) => {
                let a2 = self.norm(a);
                if *a2 == Term::Skip {
                    Rc::new(Term::Skip)
                } else if Rc::ptr_eq(&a2, a) {
                    t.clone()
                } else {
                    Rc::new(Term::Async(a2))
                }
            }
            Term::Finish { clock, phase, body } => {
                let b2 = self.norm(body);
                if *b2 == Term::Skip {
                    Rc::new(Term::Skip)
                } else if Rc::ptr_eq(&b2, body) {
                    t.clone()
                } else {
                    Rc::new(Term::Finish { clock: *clock, phase: *phase, body: b2 })
                }
            }
            Term::Loop { node, env, next, hi, async_body } => {
                if next > hi {
                    return Rc::new(Term::Skip);
                }
                let StmtKind::For { iter, body, .. } = &self.table.node(*node).kind else {
                    unreachable!("loop term for non-loop node")
                };
                let mut inner = (**env).clone();
                inner.insert(iter.clone(), *next);
                let first = self.expand(body, &Rc::new(inner));
                let rest = Term::Loop { node: *node, env: env.clone(), next: next + 1, hi: *hi, async_body: *async_body };
                self.norm(&Rc::new(Term::seq(first, rest)))
            }
            _ => t.clone(),
        }
    }

    pub fn initial(&self) -> Rc<Term> {
        let env = Rc::new(BTreeMap::new());
        self.norm(&Rc::new(self.expand(self.root, &env)))
    }

    fn steps(&self, t: &Rc<Term>, ctx: &mut Vec<(u32, u32)>, out: &mut Vec<(Term, Edge)>) {
        match t.as_ref() {
            Term::Exec(i) => out.push((Term::Skip, Edge::Exec { inst: *i, phases: ctx.clone() })),
            Term::Seq(a, b) => {
                let mut sub = Vec::new();
                self.steps(a, ctx, &mut sub);
                out.extend(sub.drain(..).map(|(a2, e)| (Term::Seq(Rc::new(a2), b.clone()), e)));
                if a.is_async() {
                    self.steps(b, ctx, &mut sub);
                    out.extend(sub.into_iter().map(|(b2, e)| (Term::Seq(a.clone(), Rc::new(b2)), e)));
                }
            }
            Term::Async(a) => {
                let mut sub = Vec::new();
                self.steps(a, ctx, &mut sub);
                out.extend(sub.into_iter().map(|(a2, e)| (Term::Async(Rc::new(a2)), e)));
            }
            Term::Finish { clock, phase, body } => {
                if let Some(c) = clock {
                    ctx.push((*c, *phase));
                }
                let mut sub = Vec::new();
                self.steps(body, ctx, &mut sub);
                if clock.is_some() {
                    ctx.pop();
                }
                out.extend(sub.into_iter().map(|(b2, e)| {
                    (Term::Finish { clock: *clock, phase: *phase, body: Rc::new(b2) }, e)
                }));
                if let Some(c) = clock {
                    if let Some((b2, advances)) = body.clock_step() {
                        out.push((
                            Term::Finish { clock: *clock, phase: phase + 1, body: Rc::new(b2) },
                            Edge::Clock { clock: *c, seq_no: phase + 1, advances },
                        ));
                    }
                }
            }
            Term::Skip | Term::Advance | Term::Loop { .. } => {}
        }
    }

    fn successors(&self, t: &Rc<Term>) -> Vec<(Rc<Term>, Edge)> {
        let mut out = Vec::new();
        self.steps(t, &mut Vec::new(), &mut out);
        out.into_iter().map(|(t2, e)| (self.norm(&Rc::new(t2)), e)).collect()
    }

    fn event(&self, e: &Edge) -> TraceEvent {
        match e {
            Edge::Exec { inst, .. } => TraceEvent::BasicExec { instance: self.instances[*inst as usize].clone() },
            Edge::Clock { clock, seq_no, .. } => TraceEvent::ClockStep { clock: self.clock(*clock), seq_no: *seq_no },
        }
    }

    /// All one-step successors of a residual term, with the event each emits.
    pub fn step(&self, t: &Rc<Term>) -> Vec<(Rc<Term>, Option<TraceEvent>)> {
        self.successors(t).into_iter().map(|(t2, e)| (t2, Some(self.event(&e)))).collect()
    }

    /// One maximal trace, always taking the first successor.
    pub fn first_trace(&self) -> Vec<TraceEvent> {
        let mut t = self.initial();
        let mut out = Vec::new();
        loop {
            let mut succ = self.successors(&t);
            if succ.is_empty() {
                return out;
            }
            let (t2, e) = succ.swap_remove(0);
            out.push(self.event(&e));
            t = t2;
        }
    }

    /// Exhaustive exploration of every interleaving.
    pub fn explore(&self, limits: Limits) -> Result<DynamicFacts, SemanticsError> {
        struct Node {
            edges: Vec<(usize, Edge)>,
            future: FixedBitSet,
            traces: u128,
            advances: u64,
        }
        let n = self.instances.len();
        let mut memo: HashMap<Rc<Term>, usize> = HashMap::new();
        let mut nodes: Vec<Option<Node>> = Vec::new();
        let mut terms: Vec<Rc<Term>> = Vec::new();
        let mut flag: Vec<u8> = Vec::new();
        let init = self.initial();
        memo.insert(init.clone(), 0);
        terms.push(init);
        nodes.push(None);
        flag.push(0);

        let mut after = vec![FixedBitSet::with_capacity(n); n];
        let mut executed = FixedBitSet::with_capacity(n);
        let mut phase: BTreeMap<(usize, u32), u32> = BTreeMap::new();
        let mut clock_steps: BTreeMap<u32, u32> = BTreeMap::new();
        let mut deadlock = false;

        let mut stack = vec![(0usize, false)];
        while let Some((s, closing)) = stack.pop() {
            if !closing {
                if flag[s] != 0 {
                    continue;
                }
                flag[s] = 1;
                let succ = self.successors(&terms[s]);
                if succ.is_empty() && *terms[s] != Term::Skip {
                    deadlock = true;
                }
                let mut edges = Vec::with_capacity(succ.len());
                stack.push((s, true));
                for (t2, e) in succ {
                    let id = match memo.get(&t2) {
                        Some(&id) => id,
                        None => {
                            let id = terms.len();
                            if id >= limits.max_states {
                                return Err(SemanticsError::StateLimit { limit: limits.max_states });
                            }
                            memo.insert(t2.clone(), id);
                            terms.push(t2);
                            nodes.push(None);
                            flag.push(0);
                            id
                        }
                    };
                    match &e {
                        Edge::Exec { inst, phases } => {
                            for &(c, ph) in phases {
                                let slot = phase.entry((*inst as usize, c)).or_insert(ph);
                                if *slot != ph {
                                    return Err(SemanticsError::Inconsistent(format!(
                                        "instance {} observed at phases {} and {} of {}",
                                        self.instances[*inst as usize],
                                        slot,
                                        ph,
                                        self.clock(c)
                                    )));
                                }
                            }
                        }
                        Edge::Clock { clock, seq_no, .. } => {
                            let slot = clock_steps.entry(*clock).or_insert(0);
                            *slot = (*slot).max(*seq_no);
                        }
                    }
                    if flag[id] == 1 {
                        return Err(SemanticsError::Inconsistent("cycle in transition graph".into()));
                    }
                    if flag[id] == 0 {
                        stack.push((id, false));
                    }
                    edges.push((id, e));
                }
                nodes[s] = Some(Node { edges, future: FixedBitSet::with_capacity(n), traces: 0, advances: 0 });
            } else {
                let mut node = nodes[s].take().expect("closing an unopened state");
                let mut expected: Option<FixedBitSet> = None;
                let mut traces: u128 = 0;
                let mut advances = 0u64;
                for (t, e) in &node.edges {
                    let child = nodes[*t].as_ref().expect("child closed before parent");
                    let mut fut = child.future.clone();
                    let adv = match e {
                        Edge::Exec { inst, .. } => {
                            let u = *inst as usize;
                            if fut.contains(u) {
                                return Err(SemanticsError::Inconsistent(format!(
                                    "instance {} executes twice",
                                    self.instances[u]
                                )));
                            }
                            after[u].union_with(&child.future);
                            executed.insert(u);
                            fut.insert(u);
                            0
                        }
                        Edge::Clock { advances, .. } => *advances,
                    };
                    match &expected {
                        None => expected = Some(fut),
                        Some(x) if *x != fut => {
                            return Err(SemanticsError::Inconsistent(format!(
                                "different instance sets remain after state {s}"
                            )))
                        }
                        _ => {}
                    }
                    traces = traces.saturating_add(child.traces);
                    advances = advances.max(adv + child.advances);
                }
                if node.edges.is_empty() {
                    traces = 1;
                }
                if let Some(lim) = limits.max_traces {
                    if traces > lim {
                        return Err(SemanticsError::TraceLimit { limit: lim });
                    }
                }
                node.future = expected.unwrap_or_else(|| FixedBitSet::with_capacity(n));
                node.traces = traces;
                node.advances = advances;
                nodes[s] = Some(node);
                flag[s] = 2;
            }
        }
        let root = nodes[0].as_ref().expect("root explored");
        if root.future.count_ones(..) != n && !deadlock {
            return Err(SemanticsError::Inconsistent("terminated without executing every instance".into()));
        }
        Ok(DynamicFacts {
            instances: self.instances.clone(),
            after,
            phase: phase.into_iter().map(|((u, c), ph)| ((u, self.clock(c)), ph)).collect(),
            clock_steps: clock_steps.into_iter().map(|(c, k)| (self.clock(c), k)).collect(),
            terminated: !deadlock,
            trace_count: root.traces,
            states: terms.len(),
            advances: root.advances,
        })
    }
}

/// Ground truth gathered from every interleaving.
#[derive(Clone, Debug)]
pub struct DynamicFacts {
    pub instances: Vec<InstanceId>,
    /// `after[u]`: instances that run after `u` in at least one trace.
    after: Vec<FixedBitSet>,
    pub phase: BTreeMap<(usize, ClockInstance), u32>,
    pub clock_steps: BTreeMap<ClockInstance, u32>,
    pub terminated: bool,
    pub trace_count: u128,
    pub states: usize,
    /// Advance executions along any complete trace.
    pub advances: u64,
}

impl DynamicFacts {
    /// `u` precedes `v` in every explored trace.
    pub fn hb(&self, u: usize, v: usize) -> bool {
        u != v && !self.after[v].contains(u)
    }

    pub fn hb_pair_count(&self) -> usize {
        let n = self.instances.len();
        (0..n).map(|u| (0..n).filter(|&v| self.hb(u, v)).count()).sum()
    }

    pub fn index_of(&self, id: &InstanceId) -> Option<usize> {
        self.instances.iter().position(|x| x == id)
    }

    pub fn find(&self, node: NodeId, iters: &BTreeMap<String, i64>) -> Option<usize> {
        self.instances.iter().position(|x| x.node == node && &x.iters == iters)
    }

    /// Phase of instance `u` on the dynamic clock owned by `clock_node` that it ran under.
    pub fn phase_of(&self, u: usize, clock_node: NodeId) -> Option<u32> {
        self.phase
            .iter()
            .find(|((w, c), _)| *w == u && c.node == clock_node)
            .map(|(_, p)| *p)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct DynamicRace {
    pub a: InstanceId,
    pub b: InstanceId,
    pub array: String,
    pub element: Vec<i64>,
    pub write_write: bool,
}

impl fmt::Display for DynamicRace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = if self.write_write { "write-write" } else { "read-write" };
        write!(f, "{kind} race on {}{:?} between {} and {}", self.array, self.element, self.a, self.b)
    }
}

/// Conflicting instance pairs left unordered by the explored traces.
pub fn dynamic_races(program: &Program, params: &BTreeMap<String, i64>, facts: &DynamicFacts) -> Vec<DynamicRace> {
    let table = program.table();
    let mut touched: Vec<Vec<(String, Vec<i64>, AccessMode)>> = Vec::new();
    for inst in &facts.instances {
        let StmtKind::Basic(b) = &table.node(inst.node).kind else { unreachable!() };
        let lookup = |v: &str| inst.iters.get(v).or_else(|| params.get(v)).copied();
        touched.push(
            b.accesses()
                .map(|a| {
                    let el = a.subscripts.iter().map(|s| s.eval_with(lookup).unwrap()).collect();
                    (a.array.clone(), el, a.mode)
                })
                .collect(),
        );
    }
    let mut out = std::collections::BTreeSet::new();
    let n = facts.instances.len();
    for u in 0..n {
        for v in u + 1..n {
            if facts.hb(u, v) || facts.hb(v, u) {
                continue;
            }
            for (arr, el, mu) in &touched[u] {
                for (arr2, el2, mv) in &touched[v] {
                    if arr == arr2 && el == el2 && (*mu == AccessMode::Write || *mv == AccessMode::Write) {
                        out.insert(DynamicRace {
                            a: facts.instances[u].clone(),
                            b: facts.instances[v].clone(),
                            array: arr.clone(),
                            element: el.clone(),
                            write_write: *mu == AccessMode::Write && *mv == AccessMode::Write,
                        });
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Convenience wrapper: instantiate and explore.
pub fn explore(program: &Program, params: &BTreeMap<String, i64>, limits: Limits) -> Result<DynamicFacts, SemanticsError> {
    Machine::new(program, params)?.explore(limits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::load;

    fn params(kv: &[(&str, i64)]) -> BTreeMap<String, i64> {
        kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    const JACOBI: &str = "
param N >= 2; param T >= 0;
array A[1]; array B[1];
clocked finish for (i = 1 : N - 1) clocked async for (t = 0 : T) {
  B[i] = S0(A[i-1], A[i], A[i+1]);
  advance;
  A[i] = S1(B[i-1], B[i], B[i+1]);
  advance;
}";

    #[test]
    fn stuck_and_yield() {
        assert!(Term::Advance.is_stuck());
        assert!(!Term::Skip.is_stuck());
        let t = Term::seq(Term::async_(Term::Advance), Term::Advance);
        assert!(t.is_stuck());
        let (y, n) = t.clock_step().unwrap();
        assert_eq!(y, Term::seq(Term::async_(Term::Skip), Term::Skip));
        assert_eq!(n, 2);
        assert_eq!(Term::async_(Term::Advance).clock_step().unwrap().0, Term::async_(Term::Skip));
        assert!(Term::Exec(0).clock_step().is_none());
    }

    #[test]
    fn instantiate_checks_params() {
        let p = load(JACOBI).unwrap();
        assert!(Machine::new(&p, &params(&[("N", 3)])).is_err());
        assert!(Machine::new(&p, &params(&[("N", 1), ("T", 0)])).is_err());
        assert!(Machine::new(&p, &params(&[("N", 3), ("T", 1)])).is_ok());
    }

    #[test]
    fn out_of_order_rule() {
        let p = load("array A[0]; array B[0]; { async A = f(); B = g(); }").unwrap();
        let m = Machine::new(&p, &BTreeMap::new()).unwrap();
        assert_eq!(m.step(&m.initial()).len(), 2);
        let p = load("array A[0]; array B[0]; { A = f(); B = g(); }").unwrap();
        let m = Machine::new(&p, &BTreeMap::new()).unwrap();
        assert_eq!(m.step(&m.initial()).len(), 1);
    }

    #[test]
    fn jacobi_phases_and_no_races() {
        let p = load(JACOBI).unwrap();
        let prm = params(&[("N", 3), ("T", 1)]);
        let f = explore(&p, &prm, Limits::default()).unwrap();
        assert!(f.terminated);
        for (u, inst) in f.instances.iter().enumerate() {
            let t = inst.iters["t"] as u32;
            let expect = if inst.label == "S0" { 2 * t } else { 2 * t + 1 };
            assert_eq!(f.phase_of(u, NodeId(0)), Some(expect), "{inst}");
        }
        assert!(dynamic_races(&p, &prm, &f).is_empty());
    }

    #[test]
    fn trace_dump_format() {
        let p = load(JACOBI).unwrap();
        let m = Machine::new(&p, &params(&[("N", 2), ("T", 0)])).unwrap();
        let lines: Vec<String> = m.first_trace().iter().map(|e| e.to_string()).collect();
        assert_eq!(lines, ["exec S0 i=1 t=0", "clockstep F0 #1", "exec S1 i=1 t=0", "clockstep F0 #2"]);
    }

    #[test]
    fn finish_orders_async() {
        let p = load("array A[0]; { finish async A = f(); A = g(); }").unwrap();
        let f = explore(&p, &BTreeMap::new(), Limits::default()).unwrap();
        assert!(f.hb(0, 1));
        let p = load("array A[0]; { async A = f(); A = g(); }").unwrap();
        let f = explore(&p, &BTreeMap::new(), Limits::default()).unwrap();
        assert!(!f.hb(0, 1) && !f.hb(1, 0));
        assert_eq!(f.trace_count, 2);
        assert_eq!(dynamic_races(&p, &BTreeMap::new(), &f).len(), 1);
    }

    #[test]
    fn state_limit_is_reported() {
        let p = load(JACOBI).unwrap();
        let e = explore(&p, &params(&[("N", 4), ("T", 2)]), Limits { max_states: 10, max_traces: None }).unwrap_err();
        assert!(e.is_incomplete());
    }
}
