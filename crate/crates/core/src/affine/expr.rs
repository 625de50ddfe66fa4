use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Integer affine form `constant + sum(coeff * var)`.
///
/// Zero coefficients are never stored, so structural equality is semantic
/// equality.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AffineExpr {
    pub constant: i64,
    pub terms: BTreeMap<String, i64>,
}

impl AffineExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: i64) -> Self {
        AffineExpr {
            constant: c,
            terms: BTreeMap::new(),
        }
    }

    pub fn var(name: impl Into<String>) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(name.into(), 1);
        AffineExpr { constant: 0, terms }
    }

    pub fn term(name: impl Into<String>, coeff: i64) -> Self {
        let mut e = Self::zero();
        e.add_term(name, coeff);
        e
    }

    pub fn add_term(&mut self, name: impl Into<String>, coeff: i64) {
        if coeff == 0 {
            return;
        }
        let name = name.into();
        let slot = self.terms.entry(name.clone()).or_insert(0);
        *slot += coeff;
        if *slot == 0 {
            self.terms.remove(&name);
        }
    }

    pub fn coeff(&self, name: &str) -> i64 {
        self.terms.get(name).copied().unwrap_or(0)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn vars(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.terms.contains_key(name)
    }

    pub fn add(&self, other: &AffineExpr) -> AffineExpr {
        let mut out = self.clone();
        out.constant += other.constant;
        for (v, c) in &other.terms {
            out.add_term(v.clone(), *c);
        }
        out
    }

    pub fn sub(&self, other: &AffineExpr) -> AffineExpr {
        self.add(&other.scale(-1))
    }

    pub fn scale(&self, k: i64) -> AffineExpr {
        if k == 0 {
            return AffineExpr::zero();
        }
        AffineExpr {
            constant: self.constant * k,
            terms: self.terms.iter().map(|(v, c)| (v.clone(), c * k)).collect(),
        }
    }

    pub fn plus_const(&self, k: i64) -> AffineExpr {
        let mut out = self.clone();
        out.constant += k;
        out
    }

    /// Replace `name` by `value` everywhere.
    pub fn substitute(&self, name: &str, value: &AffineExpr) -> AffineExpr {
        match self.terms.get(name) {
            None => self.clone(),
            Some(&c) => {
                let mut rest = self.clone();
                rest.terms.remove(name);
                rest.add(&value.scale(c))
            }
        }
    }

    pub fn rename(&self, f: impl Fn(&str) -> String) -> AffineExpr {
        let mut out = AffineExpr::constant(self.constant);
        for (v, c) in &self.terms {
            out.add_term(f(v), *c);
        }
        out
    }

    /// Evaluate under a partial valuation; `None` if a variable is unbound.
    pub fn eval_with(&self, lookup: impl Fn(&str) -> Option<i64>) -> Option<i64> {
        let mut acc = self.constant;
        for (v, c) in &self.terms {
            acc += c * lookup(v)?;
        }
        Some(acc)
    }

    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Option<i64> {
        self.eval_with(|v| env.get(v).copied())
    }

    /// Fix some variables to integer values, leaving the rest symbolic.
    pub fn partial_eval(&self, env: &BTreeMap<String, i64>) -> AffineExpr {
        let mut out = AffineExpr::constant(self.constant);
        for (v, c) in &self.terms {
            match env.get(v) {
                Some(x) => out.constant += c * x,
                None => out.add_term(v.clone(), *c),
            }
        }
        out
    }
}

impl fmt::Display for AffineExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (v, &c) in &self.terms {
            let mag = c.abs();
            if first {
                if c < 0 {
                    write!(f, "-")?;
                }
            } else if c < 0 {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if mag == 1 {
                write!(f, "{v}")?;
            } else {
                write!(f, "{mag}*{v}")?;
            }
            first = false;
        }
        if first {
            write!(f, "{}", self.constant)?;
        } else if self.constant > 0 {
            write!(f, " + {}", self.constant)?;
        } else if self.constant < 0 {
            write!(f, " - {}", -self.constant)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConstraintKind {
    /// `expr >= 0`
    NonNeg,
    /// `expr == 0`
    Zero,
}

/// A single affine constraint `expr >= 0` or `expr == 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Constraint {
    pub expr: AffineExpr,
    pub kind: ConstraintKind,
}

impl Constraint {
    pub fn non_neg(expr: AffineExpr) -> Self {
        Constraint {
            expr,
            kind: ConstraintKind::NonNeg,
        }
    }

    pub fn zero(expr: AffineExpr) -> Self {
        Constraint {
            expr,
            kind: ConstraintKind::Zero,
        }
    }

    /// `a >= b`
    pub fn ge(a: &AffineExpr, b: &AffineExpr) -> Self {
        Self::non_neg(a.sub(b))
    }

    /// `a <= b`
    pub fn le(a: &AffineExpr, b: &AffineExpr) -> Self {
        Self::non_neg(b.sub(a))
    }

    /// `a < b`, i.e. `a <= b - 1` over the integers.
    pub fn lt(a: &AffineExpr, b: &AffineExpr) -> Self {
        Self::non_neg(b.sub(a).plus_const(-1))
    }

    pub fn gt(a: &AffineExpr, b: &AffineExpr) -> Self {
        Self::lt(b, a)
    }

    pub fn eq(a: &AffineExpr, b: &AffineExpr) -> Self {
        Self::zero(a.sub(b))
    }

    pub fn is_equality(&self) -> bool {
        self.kind == ConstraintKind::Zero
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.expr.mentions(name)
    }

    /// Truth value when the constraint has no variables.
    pub fn constant_truth(&self) -> Option<bool> {
        if !self.expr.is_constant() {
            return None;
        }
        Some(match self.kind {
            ConstraintKind::NonNeg => self.expr.constant >= 0,
            ConstraintKind::Zero => self.expr.constant == 0,
        })
    }

    pub fn holds(&self, env: &BTreeMap<String, i64>) -> Option<bool> {
        self.holds_with(|v| env.get(v).copied())
    }

    pub fn holds_with(&self, lookup: impl Fn(&str) -> Option<i64>) -> Option<bool> {
        let v = self.expr.eval_with(lookup)?;
        Some(match self.kind {
            ConstraintKind::NonNeg => v >= 0,
            ConstraintKind::Zero => v == 0,
        })
    }

    /// The disjunction equivalent to `!self` over the integers.
    pub fn negate(&self) -> Vec<Constraint> {
        match self.kind {
            ConstraintKind::NonNeg => vec![Constraint::non_neg(self.expr.scale(-1).plus_const(-1))],
            ConstraintKind::Zero => vec![
                Constraint::non_neg(self.expr.plus_const(-1)),
                Constraint::non_neg(self.expr.scale(-1).plus_const(-1)),
            ],
        }
    }

    pub fn substitute(&self, name: &str, value: &AffineExpr) -> Constraint {
        Constraint {
            expr: self.expr.substitute(name, value),
            kind: self.kind,
        }
    }

    pub fn rename(&self, f: impl Fn(&str) -> String) -> Constraint {
        Constraint {
            expr: self.expr.rename(f),
            kind: self.kind,
        }
    }

    pub fn partial_eval(&self, env: &BTreeMap<String, i64>) -> Constraint {
        Constraint {
            expr: self.expr.partial_eval(env),
            kind: self.kind,
        }
    }

    /// Divide through by the coefficient gcd, tightening inequalities.
    /// Returns `None` when the constraint is integer-infeasible on its own.
    pub fn normalized(&self) -> Option<Constraint> {
        let g = self
            .expr
            .terms
            .values()
            .fold(0i64, |g, &c| num_integer::gcd(g, c));
        if g == 0 {
            return match self.constant_truth() {
                Some(true) => Some(Constraint {
                    expr: AffineExpr::zero(),
                    kind: self.kind,
                }),
                _ => None,
            };
        }
        let c = self.expr.constant;
        let constant = match self.kind {
            ConstraintKind::Zero => {
                if c % g != 0 {
                    return None;
                }
                c / g
            }
            ConstraintKind::NonNeg => c.div_euclid(g),
        };
        Some(Constraint {
            expr: AffineExpr {
                constant,
                terms: self.expr.terms.iter().map(|(v, k)| (v.clone(), k / g)).collect(),
            },
            kind: self.kind,
        })
    }
}

impl fmt::Display for Constraint {
    /// Prints as `lhs >= rhs` / `lhs == rhs` with positive coefficients on both sides.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut lhs = AffineExpr::zero();
        let mut rhs = AffineExpr::zero();
        for (v, &c) in &self.expr.terms {
            if c > 0 {
                lhs.add_term(v.clone(), c);
            } else {
                rhs.add_term(v.clone(), -c);
            }
        }
        let k = self.expr.constant;
        if lhs.is_constant() && rhs.is_constant() {
            lhs.constant = k;
        } else if lhs.is_constant() {
            lhs.constant = k;
        } else {
            rhs.constant = -k;
        }
        let op = match self.kind {
            ConstraintKind::NonNeg => ">=",
            ConstraintKind::Zero => "==",
        };
        write!(f, "{lhs} {op} {rhs}")
    }
}
