use std::fmt;

use serde::Serialize;

use super::ast::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ClockRule {
    /// `clocked async` needs a governing clocked finish.
    ClockedAsyncEnclosed,
    /// No unclocked async/finish between a clocked async and its governing finish.
    NoUnclockedBetween,
    /// `advance` needs a governing clocked finish.
    AdvanceEnclosed,
    /// `advance` must not run in an unclocked async of its clock.
    AdvanceNotInUnclockedAsync,
}

impl fmt::Display for ClockRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ClockRule::ClockedAsyncEnclosed => "clocked async must be enclosed by a clocked finish",
            ClockRule::NoUnclockedBetween => {
                "no unclocked async or finish may appear between a clocked async and its clocked finish"
            }
            ClockRule::AdvanceEnclosed => "advance must be enclosed by a clocked finish",
            ClockRule::AdvanceNotInUnclockedAsync => "advance must not be enclosed by an unclocked async",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub rule: ClockRule,
    pub node: NodeId,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {}: {}", self.node, self.message)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SyncClass {
    Async,
    Sync,
}

pub fn classify(s: &Stmt) -> SyncClass {
    let is_async = match &s.kind {
        StmtKind::Async { .. } => true,
        StmtKind::For { body, .. } | StmtKind::If { body, .. } => classify(body) == SyncClass::Async,
        StmtKind::Seq(items) => !items.is_empty() && items.iter().all(|x| classify(x) == SyncClass::Async),
        _ => false,
    };
    if is_async {
        SyncClass::Async
    } else {
        SyncClass::Sync
    }
}

/// Nearest clocked-finish ancestor of `id`, or `None`. Errors on unknown ids.
pub fn governing_clocked_finish(p: &Program, id: NodeId) -> Result<Option<NodeId>, super::LangError> {
    let t = p.table();
    if t.get(id).is_none() {
        return Err(super::LangError::UnknownNode(id));
    }
    Ok(governing_in(&t, id))
}

pub(crate) fn governing_in(t: &NodeTable<'_>, id: NodeId) -> Option<NodeId> {
    t.ancestors(id).into_iter().rev().find(|a| t.node(*a).is_clocked_finish())
}

pub fn validate_clock_rules(p: &Program) -> Vec<Diagnostic> {
    let t = p.table();
    let mut out = Vec::new();
    for s in t.all() {
        let clocked_async = matches!(s.kind, StmtKind::Async { clocked: true, .. });
        let advance = matches!(s.kind, StmtKind::Advance);
        if !clocked_async && !advance {
            continue;
        }
        let anc = t.ancestors(s.id);
        let gov = anc.iter().rposition(|a| t.node(*a).is_clocked_finish());
        let Some(g) = gov else {
            let rule = if advance { ClockRule::AdvanceEnclosed } else { ClockRule::ClockedAsyncEnclosed };
            out.push(Diagnostic { rule, node: s.id, message: rule.to_string() });
            continue;
        };
        let between = &anc[g + 1..];
        for a in between {
            match t.node(*a).kind {
                StmtKind::Async { clocked: false, .. } => {
                    let rule = if advance {
                        ClockRule::AdvanceNotInUnclockedAsync
                    } else {
                        ClockRule::NoUnclockedBetween
                    };
                    out.push(Diagnostic {
                        rule,
                        node: s.id,
                        message: format!("{rule} (unclocked async at node {a})"),
                    });
                }
                StmtKind::Finish { clocked: false, .. } if clocked_async => {
                    let rule = ClockRule::NoUnclockedBetween;
                    out.push(Diagnostic {
                        rule,
                        node: s.id,
                        message: format!("{rule} (unclocked finish at node {a})"),
                    });
                }
                _ => {}
            }
        }
    }
    out
}
