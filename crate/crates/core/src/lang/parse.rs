use std::collections::BTreeSet;

use thiserror::Error;

use super::ast::*;
use crate::affine::{AffineExpr, Constraint};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("non-affine expression: {0}")]
    NonAffine(String),
    #[error("array `{array}` has {expected} dimension(s) but {found} subscript(s) were given")]
    DimensionMismatch {
        array: String,
        expected: usize,
        found: usize,
    },
    #[error("iterator `{0}` shadows an enclosing iterator or parameter")]
    Shadowing(String),
    #[error("duplicate declaration of `{0}`")]
    Duplicate(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 19] = [
    ">=", "<=", "==", "&&", ">", "<", "=", "(", ")", "{", "}", "[", "]", ";", ":", ",", "+", "-", "*",
];

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            out.push(Token { tok: Tok::Ident(s), line: start.0, col: start.1 });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                i += 1;
                col += 1;
            }
            let v = s.parse::<i64>().map_err(|_| ParseError {
                line: start.0,
                col: start.1,
                kind: ParseErrorKind::Syntax(format!("integer literal `{s}` out of range")),
            })?;
            out.push(Token { tok: Tok::Int(v), line: start.0, col: start.1 });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Token { tok: Tok::Sym(s), line: start.0, col: start.1 });
            }
            None => {
                return Err(ParseError {
                    line,
                    col,
                    kind: ParseErrorKind::Syntax(format!("unexpected character `{c}`")),
                })
            }
        }
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    params: Vec<Param>,
    arrays: Vec<ArrayDecl>,
    scope: Vec<String>,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn err<T>(&self, kind: ParseErrorKind) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(ParseError { line: t.line, col: t.col, kind })
    }

    fn err_at<T>(&self, at: usize, kind: ParseErrorKind) -> PResult<T> {
        let t = &self.toks[at];
        Err(ParseError { line: t.line, col: t.col, kind })
    }

    fn describe(t: &Tok) -> String {
        match t {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> PResult<()> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            self.err(ParseErrorKind::Syntax(format!(
                "expected `{s}`, found {}",
                Self::describe(self.peek())
            )))
        }
    }


    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.pos += 1;
                Ok(s)
            }
            t => self.err(ParseErrorKind::Syntax(format!("expected identifier, found {}", Self::describe(&t)))),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = self.eat_sym("-");
        match self.peek().clone() {
            Tok::Int(v) => {
                self.pos += 1;
                Ok(if neg { -v } else { v })
            }
            t => self.err(ParseErrorKind::Syntax(format!("expected integer, found {}", Self::describe(&t)))),
        }
    }

    fn declared(&self, name: &str) -> bool {
        self.params.iter().any(|p| p.name == name) || self.arrays.iter().any(|a| a.name == name)
    }

    fn header(&mut self) -> PResult<()> {
        loop {
            if self.is_kw("param") {
                self.pos += 1;
                let at = self.pos;
                let name = self.ident()?;
                if self.declared(&name) || is_keyword(&name) {
                    return self.err_at(at, ParseErrorKind::Duplicate(name));
                }
                self.expect_sym(">=")?;
                let min = self.int()?;
                self.expect_sym(";")?;
                self.params.push(Param { name, min });
            } else if self.is_kw("array") {
                self.pos += 1;
                let at = self.pos;
                let name = self.ident()?;
                if self.declared(&name) || is_keyword(&name) {
                    return self.err_at(at, ParseErrorKind::Duplicate(name));
                }
                self.expect_sym("[")?;
                let d = self.int()?;
                if d < 0 {
                    return self.err(ParseErrorKind::Syntax("negative dimensionality".into()));
                }
                self.expect_sym("]")?;
                self.expect_sym(";")?;
                self.arrays.push(ArrayDecl { name, dims: d as usize });
            } else {
                return Ok(());
            }
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let kind = if self.is_sym("{") {
            self.pos += 1;
            let mut items = Vec::new();
            while !self.is_sym("}") {
                if *self.peek() == Tok::Eof {
                    return self.err(ParseErrorKind::Syntax("unterminated block".into()));
                }
                items.push(self.stmt()?);
            }
            self.pos += 1;
            StmtKind::Seq(items)
        } else if self.is_kw("clocked") {
            self.pos += 1;
            if self.is_kw("finish") {
                self.pos += 1;
                StmtKind::Finish { clocked: true, body: Box::new(self.stmt()?) }
            } else if self.is_kw("async") {
                self.pos += 1;
                StmtKind::Async { clocked: true, body: Box::new(self.stmt()?) }
            } else {
                return self.err(ParseErrorKind::Syntax("expected `finish` or `async` after `clocked`".into()));
            }
        } else if self.is_kw("finish") {
            self.pos += 1;
            StmtKind::Finish { clocked: false, body: Box::new(self.stmt()?) }
        } else if self.is_kw("async") {
            self.pos += 1;
            StmtKind::Async { clocked: false, body: Box::new(self.stmt()?) }
        } else if self.is_kw("advance") {
            self.pos += 1;
            self.expect_sym(";")?;
            StmtKind::Advance
        } else if self.is_kw("for") {
            self.pos += 1;
            self.expect_sym("(")?;
            let at = self.pos;
            let iter = self.ident()?;
            if self.scope.contains(&iter) || self.declared(&iter) || is_keyword(&iter) {
                return self.err_at(at, ParseErrorKind::Shadowing(iter));
            }
            self.expect_sym("=")?;
            let lo = self.affine()?;
            self.expect_sym(":")?;
            let hi = self.affine()?;
            self.expect_sym(")")?;
            self.scope.push(iter.clone());
            let body = self.stmt();
            self.scope.pop();
            StmtKind::For { iter, lo, hi, body: Box::new(body?) }
        } else if self.is_kw("if") {
            self.pos += 1;
            self.expect_sym("(")?;
            let mut conds = vec![self.condition()?];
            while self.eat_sym("&&") {
                conds.push(self.condition()?);
            }
            self.expect_sym(")")?;
            StmtKind::If { conds, body: Box::new(self.stmt()?) }
        } else if matches!(self.peek(), Tok::Ident(_)) {
            StmtKind::Basic(self.basic()?)
        } else {
            return self.err(ParseErrorKind::Syntax(format!(
                "expected statement, found {}",
                Self::describe(self.peek())
            )));
        };
        Ok(Stmt { id: NodeId(0), kind })
    }

    fn condition(&mut self) -> PResult<Constraint> {
        let a = self.affine()?;
        let op = match self.peek() {
            Tok::Sym(s @ (">=" | "<=" | ">" | "<" | "==")) => *s,
            t => {
                return self.err(ParseErrorKind::Syntax(format!(
                    "expected comparison operator, found {}",
                    Self::describe(t)
                )))
            }
        };
        self.pos += 1;
        let b = self.affine()?;
        Ok(match op {
            ">=" => Constraint::ge(&a, &b),
            "<=" => Constraint::le(&a, &b),
            ">" => Constraint::gt(&a, &b),
            "<" => Constraint::lt(&a, &b),
            _ => Constraint::eq(&a, &b),
        })
    }

    fn access(&mut self, mode: AccessMode) -> PResult<AccessRef> {
        let at = self.pos;
        let array = self.ident()?;
        let dims = match self.arrays.iter().find(|a| a.name == array) {
            Some(a) => a.dims,
            None => return self.err_at(at, ParseErrorKind::UnknownIdentifier(array)),
        };
        let mut subscripts = Vec::new();
        while self.eat_sym("[") {
            subscripts.push(self.affine()?);
            while self.eat_sym(",") {
                subscripts.push(self.affine()?);
            }
            self.expect_sym("]")?;
        }
        if subscripts.len() != dims {
            return self.err_at(
                at,
                ParseErrorKind::DimensionMismatch { array, expected: dims, found: subscripts.len() },
            );
        }
        Ok(AccessRef { array, subscripts, mode })
    }

    fn basic(&mut self) -> PResult<Basic> {
        let write = self.access(AccessMode::Write)?;
        self.expect_sym("=")?;
        let label = self.ident()?;
        self.expect_sym("(")?;
        let mut reads = Vec::new();
        if !self.is_sym(")") {
            loop {
                let is_array = matches!(self.peek(), Tok::Ident(n) if self.arrays.iter().any(|a| &a.name == n));
                if is_array {
                    reads.push(self.access(AccessMode::Read)?);
                } else {
                    // scalar argument: checked for scope, otherwise ignored
                    self.affine()?;
                }
                if !self.eat_sym(",") {
                    break;
                }
            }
        }
        self.expect_sym(")")?;
        self.expect_sym(";")?;
        Ok(Basic { label, write, reads })
    }

    fn affine(&mut self) -> PResult<AffineExpr> {
        let mut acc = if self.eat_sym("-") {
            self.term()?.scale(-1)
        } else {
            self.term()?
        };
        loop {
            if self.eat_sym("+") {
                acc = acc.add(&self.term()?);
            } else if self.eat_sym("-") {
                acc = acc.sub(&self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> PResult<AffineExpr> {
        let at = self.pos;
        let mut acc = self.factor()?;
        while self.eat_sym("*") {
            let rhs = self.factor()?;
            acc = if acc.is_constant() {
                rhs.scale(acc.constant)
            } else if rhs.is_constant() {
                acc.scale(rhs.constant)
            } else {
                return self.err_at(at, ParseErrorKind::NonAffine(format!("product of `{acc}` and `{rhs}`")));
            };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> PResult<AffineExpr> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.pos += 1;
                Ok(AffineExpr::constant(v))
            }
            Tok::Ident(name) => {
                if !(self.scope.contains(&name) || self.params.iter().any(|p| p.name == name)) {
                    return self.err(ParseErrorKind::UnknownIdentifier(name));
                }
                self.pos += 1;
                Ok(AffineExpr::var(name))
            }
            Tok::Sym("(") => {
                self.pos += 1;
                let e = self.affine()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("-") => {
                self.pos += 1;
                Ok(self.factor()?.scale(-1))
            }
            t => self.err(ParseErrorKind::Syntax(format!("expected expression, found {}", Self::describe(&t)))),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "param" | "array" | "finish" | "async" | "clocked" | "advance" | "for" | "if"
    )
}

/// Parse source text into a program with preorder node ids.
///
/// Clock-rule validation is separate; see [`super::validate_clock_rules`].
pub fn parse(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser {
        toks: lex(src)?,
        pos: 0,
        params: Vec::new(),
        arrays: Vec::new(),
        scope: Vec::new(),
    };
    p.header()?;
    let mut items = Vec::new();
    while *p.peek() != Tok::Eof {
        items.push(p.stmt()?);
    }
    let mut root = match items.len() {
        0 => return p.err(ParseErrorKind::Syntax("program has no statement".into())),
        1 => items.pop().unwrap(),
        _ => Stmt { id: NodeId(0), kind: StmtKind::Seq(items) },
    };
    root.renumber(&mut 0);
    Ok(Program { params: p.params, arrays: p.arrays, root })
}

/// Names of all iterators bound anywhere in the program.
pub fn iterator_names(p: &Program) -> BTreeSet<String> {
    p.table()
        .all()
        .filter_map(|s| match &s.kind {
            StmtKind::For { iter, .. } => Some(iter.clone()),
            _ => None,
        })
        .collect()
}
