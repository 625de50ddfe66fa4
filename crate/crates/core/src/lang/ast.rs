use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::affine::{AffineExpr, Constraint};

/// Preorder index of a statement node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    /// Declared constraint `name >= min`.
    pub min: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayDecl {
    pub name: String,
    pub dims: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AccessMode {
    Read,
    Write,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AccessRef {
    pub array: String,
    pub subscripts: Vec<AffineExpr>,
    pub mode: AccessMode,
}

impl fmt::Display for AccessRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.array)?;
        for s in &self.subscripts {
            write!(f, "[{s}]")?;
        }
        Ok(())
    }
}

/// A leaf computation: one write and any number of reads.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Basic {
    pub label: String,
    pub write: AccessRef,
    pub reads: Vec<AccessRef>,
}

impl Basic {
    pub fn accesses(&self) -> impl Iterator<Item = &AccessRef> {
        std::iter::once(&self.write).chain(self.reads.iter())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StmtKind {
    Basic(Basic),
    Advance,
    Seq(Vec<Stmt>),
    /// Inclusive bounds: `for (iter = lo : hi)`.
    For {
        iter: String,
        lo: AffineExpr,
        hi: AffineExpr,
        body: Box<Stmt>,
    },
    If {
        conds: Vec<Constraint>,
        body: Box<Stmt>,
    },
    Async {
        clocked: bool,
        body: Box<Stmt>,
    },
    Finish {
        clocked: bool,
        body: Box<Stmt>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stmt {
    pub id: NodeId,
    pub kind: StmtKind,
}

impl Stmt {
    pub fn children(&self) -> Vec<&Stmt> {
        match &self.kind {
            StmtKind::Basic(_) | StmtKind::Advance => Vec::new(),
            StmtKind::Seq(items) => items.iter().collect(),
            StmtKind::For { body, .. }
            | StmtKind::If { body, .. }
            | StmtKind::Async { body, .. }
            | StmtKind::Finish { body, .. } => vec![body.as_ref()],
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, StmtKind::Basic(_) | StmtKind::Advance)
    }

    pub fn is_clocked_finish(&self) -> bool {
        matches!(self.kind, StmtKind::Finish { clocked: true, .. })
    }

    /// Reassign ids in preorder starting from `next`.
    pub fn renumber(&mut self, next: &mut usize) {
        self.id = NodeId(*next);
        *next += 1;
        match &mut self.kind {
            StmtKind::Basic(_) | StmtKind::Advance => {}
            StmtKind::Seq(items) => items.iter_mut().for_each(|s| s.renumber(next)),
            StmtKind::For { body, .. }
            | StmtKind::If { body, .. }
            | StmtKind::Async { body, .. }
            | StmtKind::Finish { body, .. } => body.renumber(next),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub params: Vec<Param>,
    pub arrays: Vec<ArrayDecl>,
    pub root: Stmt,
}

impl Program {
    /// Parameter constraints `name >= min`.
    pub fn context(&self) -> Vec<Constraint> {
        self.params
            .iter()
            .map(|p| Constraint::ge(&AffineExpr::var(&p.name), &AffineExpr::constant(p.min)))
            .collect()
    }

    pub fn param_names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    pub fn array(&self, name: &str) -> Option<&ArrayDecl> {
        self.arrays.iter().find(|a| a.name == name)
    }

    pub fn table(&self) -> NodeTable<'_> {
        NodeTable::new(&self.root)
    }

    /// Check a parameter valuation against the declarations.
    pub fn check_params(&self, values: &BTreeMap<String, i64>) -> Result<(), String> {
        for p in &self.params {
            match values.get(&p.name) {
                None => return Err(format!("missing value for parameter `{}`", p.name)),
                Some(&v) if v < p.min => {
                    return Err(format!("parameter `{}` = {v} violates `{} >= {}`", p.name, p.name, p.min))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Flat view of a statement tree: id lookup and parent links.
pub struct NodeTable<'a> {
    nodes: Vec<Option<&'a Stmt>>,
    parent: Vec<Option<NodeId>>,
}

impl<'a> NodeTable<'a> {
    pub fn new(root: &'a Stmt) -> Self {
        let mut t = NodeTable {
            nodes: Vec::new(),
            parent: Vec::new(),
        };
        t.visit(root, None);
        t
    }

    fn visit(&mut self, s: &'a Stmt, parent: Option<NodeId>) {
        let i = s.id.0;
        if self.nodes.len() <= i {
            self.nodes.resize(i + 1, None);
            self.parent.resize(i + 1, None);
        }
        self.nodes[i] = Some(s);
        self.parent[i] = parent;
        for c in s.children() {
            self.visit(c, Some(s.id));
        }
    }

    pub fn get(&self, id: NodeId) -> Option<&'a Stmt> {
        self.nodes.get(id.0).copied().flatten()
    }

    pub fn node(&self, id: NodeId) -> &'a Stmt {
        self.get(id).unwrap_or_else(|| panic!("unknown node {id}"))
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parent.get(id.0).copied().flatten()
    }

    pub fn all(&self) -> impl Iterator<Item = &'a Stmt> + '_ {
        self.nodes.iter().flatten().copied()
    }

    /// Ancestors of `id`, root first, excluding `id` itself.
    pub fn ancestors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut cur = self.parent(id);
        while let Some(p) = cur {
            out.push(p);
            cur = self.parent(p);
        }
        out.reverse();
        out
    }

    pub fn is_ancestor(&self, anc: NodeId, id: NodeId) -> bool {
        let mut cur = self.parent(id);
        while let Some(p) = cur {
            if p == anc {
                return true;
            }
            cur = self.parent(p);
        }
        false
    }

    /// Loop iterators enclosing `id`, outermost first.
    pub fn enclosing_iterators(&self, id: NodeId) -> Vec<String> {
        self.ancestors(id)
            .into_iter()
            .filter_map(|a| match &self.node(a).kind {
                StmtKind::For { iter, .. } => Some(iter.clone()),
                _ => None,
            })
            .collect()
    }

    /// 1-based position of `child` inside the sequence `parent`.
    pub fn seq_position(&self, parent: NodeId, child: NodeId) -> Option<usize> {
        match &self.node(parent).kind {
            StmtKind::Seq(items) => items.iter().position(|s| s.id == child).map(|k| k + 1),
            _ => None,
        }
    }

    pub fn basics(&self) -> Vec<&'a Stmt> {
        self.all().filter(|s| matches!(s.kind, StmtKind::Basic(_))).collect()
    }

    pub fn advances(&self) -> Vec<&'a Stmt> {
        self.all().filter(|s| matches!(s.kind, StmtKind::Advance)).collect()
    }

    pub fn clocked_finishes(&self) -> Vec<&'a Stmt> {
        self.all().filter(|s| s.is_clocked_finish()).collect()
    }

    /// Display name for a leaf: the basic statement's label, or `adv<id>`.
    pub fn label(&self, id: NodeId) -> String {
        match &self.node(id).kind {
            StmtKind::Basic(b) => {
                let dup = self
                    .basics()
                    .iter()
                    .filter(|s| matches!(&s.kind, StmtKind::Basic(o) if o.label == b.label))
                    .count();
                if dup > 1 {
                    format!("{}#{}", b.label, id)
                } else {
                    b.label.clone()
                }
            }
            StmtKind::Advance => format!("adv{id}"),
            StmtKind::Finish { .. } => format!("F{id}"),
            _ => format!("node{id}"),
        }
    }
}
