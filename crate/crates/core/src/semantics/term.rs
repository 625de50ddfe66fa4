use std::collections::BTreeMap;
use std::rc::Rc;

use crate::lang::NodeId;

/// Residual program term. Loops are unrolled lazily, one iteration at a time.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Skip,
    /// A basic statement instance, by index into the instance table.
    Exec(u32),
    Advance,
    Seq(Rc<Term>, Rc<Term>),
    Async(Rc<Term>),
    Finish {
        /// Dynamic clock index for clocked finishes.
        clock: Option<u32>,
        /// Clock steps taken so far.
        phase: u32,
        body: Rc<Term>,
    },
    Loop {
        node: NodeId,
        env: Rc<BTreeMap<String, i64>>,
        next: i64,
        hi: i64,
        /// Static classification of the loop body.
        async_body: bool,
    },
}

impl Term {
    pub fn seq(a: Term, b: Term) -> Term {
        Term::Seq(Rc::new(a), Rc::new(b))
    }

    pub fn async_(a: Term) -> Term {
        Term::Async(Rc::new(a))
    }

    pub fn finish(clock: Option<u32>, body: Term) -> Term {
        Term::Finish { clock, phase: 0, body: Rc::new(body) }
    }

    pub fn is_async(&self) -> bool {
        match self {
            Term::Async(_) => true,
            Term::Seq(a, b) => a.is_async() && b.is_async(),
            Term::Loop { next, hi, async_body, .. } => next <= hi && *async_body,
            _ => false,
        }
    }

    /// Every activated sub-term is an `Advance`.
    pub fn is_stuck(&self) -> bool {
        match self {
            Term::Advance => true,
            Term::Seq(a, b) => {
                if a.is_async() {
                    a.is_stuck() && b.is_stuck()
                } else {
                    a.is_stuck()
                }
            }
            Term::Async(a) => a.is_stuck(),
            Term::Finish { clock: None, body, .. } => body.is_stuck(),
            _ => false,
        }
    }

    /// Replace every activated `Advance` by `Skip`. Returns the new term and
    /// the number of advances consumed, or `None` if the term is not stuck.
    pub fn clock_step(&self) -> Option<(Term, u64)> {
        if !self.is_stuck() {
            return None;
        }
        Some(self.yield_advances())
    }

    fn yield_advances(&self) -> (Term, u64) {
        match self {
            Term::Advance => (Term::Skip, 1),
            Term::Seq(a, b) => {
                let (a2, n) = a.yield_advances();
                if a.is_async() {
                    let (b2, m) = b.yield_advances();
                    (Term::seq(a2, b2), n + m)
                } else {
                    (Term::Seq(Rc::new(a2), b.clone()), n)
                }
            }
            Term::Async(a) => {
                let (a2, n) = a.yield_advances();
                (Term::async_(a2), n)
            }
            Term::Finish { clock: None, phase, body } => {
                let (b2, n) = body.yield_advances();
                (Term::Finish { clock: None, phase: *phase, body: Rc::new(b2) }, n)
            }
            other => (other.clone(), 0),
        }
    }
}
