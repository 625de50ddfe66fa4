//! Program generators: counting loop nests and polynomial race tests.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::lang::{load, LangError, Program};
use crate::poly::QuasiPoly;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("cannot parse polynomial `{0}`: {1}")]
    Syntax(String, String),
    #[error("negative coefficient in `{0}`")]
    NegativeCoefficient(String),
    #[error("polynomials use different variables: {0:?} and {1:?}")]
    VariableMismatch(Vec<String>, Vec<String>),
    #[error("generated program is invalid: {0}")]
    Invalid(#[from] LangError),
}

/// Polynomial with nonnegative integer coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PolynomialSpec {
    pub variables: Vec<String>,
    /// Exponent vector (aligned with `variables`) to coefficient.
    pub monomials: BTreeMap<Vec<u32>, u64>,
}

impl PolynomialSpec {
    /// Parse `+`-separated monomials such as `3*x^2*y + 1`.
    pub fn parse(text: &str) -> Result<Self, GenError> {
        Self::parse_with(text, &[])
    }

    /// Like [`parse`](Self::parse), with `vars` listed first in the variable order.
    pub fn parse_with(text: &str, vars: &[String]) -> Result<Self, GenError> {
        let err = |m: &str| GenError::Syntax(text.to_string(), m.to_string());
        if text.contains('-') {
            return Err(GenError::NegativeCoefficient(text.to_string()));
        }
        let mut variables: Vec<String> = vars.to_vec();
        let mut raw: Vec<(BTreeMap<String, u32>, u64)> = Vec::new();
        for mono in text.split('+') {
            let mono = mono.trim();
            if mono.is_empty() {
                return Err(err("empty monomial"));
            }
            let mut coef: u64 = 1;
            let mut exps: BTreeMap<String, u32> = BTreeMap::new();
            for factor in mono.split('*') {
                let factor = factor.trim();
                let (base, exp) = match factor.split_once('^') {
                    Some((b, e)) => (b.trim(), e.trim().parse::<u32>().map_err(|_| err("bad exponent"))?),
                    None => (factor, 1),
                };
                if let Ok(c) = base.parse::<u64>() {
                    coef = c
                        .checked_pow(exp)
                        .and_then(|c| coef.checked_mul(c))
                        .ok_or_else(|| err("coefficient overflow"))?;
                } else if !base.is_empty()
                    && base.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
                    && base.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
                {
                    if !variables.iter().any(|v| v == base) {
                        variables.push(base.to_string());
                    }
                    *exps.entry(base.to_string()).or_default() += exp;
                } else {
                    return Err(err(&format!("bad factor `{factor}`")));
                }
            }
            raw.push((exps, coef));
        }
        let mut monomials: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for (exps, c) in raw {
            let key = variables.iter().map(|v| exps.get(v).copied().unwrap_or(0)).collect();
            *monomials.entry(key).or_default() += c;
        }
        monomials.retain(|_, c| *c != 0);
        Ok(PolynomialSpec { variables, monomials })
    }

    /// Same polynomial over a longer variable list.
    pub fn extend_variables(&self, vars: &[String]) -> PolynomialSpec {
        let mut variables = self.variables.clone();
        for v in vars {
            if !variables.contains(v) {
                variables.push(v.clone());
            }
        }
        let monomials = self
            .monomials
            .iter()
            .map(|(e, c)| {
                let mut e = e.clone();
                e.resize(variables.len(), 0);
                (e, *c)
            })
            .collect();
        PolynomialSpec { variables, monomials }
    }

    pub fn to_poly(&self) -> QuasiPoly {
        let mut q = QuasiPoly::zero();
        for (e, c) in &self.monomials {
            let mut m = QuasiPoly::int(*c as i64);
            for (v, k) in self.variables.iter().zip(e) {
                m = &m * &QuasiPoly::var(v).pow(*k);
            }
            q = q + m;
        }
        q
    }

    pub fn eval(&self, point: &BTreeMap<String, i64>) -> i128 {
        self.monomials
            .iter()
            .map(|(e, c)| {
                let mut x = *c as i128;
                for (v, k) in self.variables.iter().zip(e) {
                    x *= (point[v] as i128).pow(*k);
                }
                x
            })
            .sum()
    }
}

struct NestWriter {
    next: usize,
    out: String,
}

impl NestWriter {
    fn line(&mut self, depth: usize, s: &str) {
        let _ = writeln!(self.out, "{}{s}", "  ".repeat(depth));
    }

    fn fresh(&mut self) -> String {
        self.next += 1;
        format!("i{}", self.next)
    }

    /// Emit statements executing exactly `q` advances. `params` are
    /// eliminated in order; `iters` are bound loop variables, newest last.
    fn realise(&mut self, q: &QuasiPoly, params: &[String], iters: &[String], depth: usize) {
        let pick = iters
            .iter()
            .rev()
            .find(|v| q.degree_in(v) > 0)
            .or_else(|| params.iter().find(|v| q.degree_in(v) > 0))
            .cloned();
        let Some(v) = pick else {
            let c = q.eval(&BTreeMap::new()).expect("constant").to_integer();
            for _ in 0..c {
                self.line(depth, "advance;");
            }
            return;
        };
        self.realise(&q.substitute(&v, &QuasiPoly::int(0)), params, iters, depth);
        let i = self.fresh();
        let iv = QuasiPoly::var(&i);
        let diff = &q.substitute(&v, &(&iv + &QuasiPoly::int(1))) - &q.substitute(&v, &iv);
        if diff.is_zero() {
            return;
        }
        self.line(depth, &format!("for ({i} = 0 : {v} - 1) {{"));
        let mut inner = iters.to_vec();
        inner.push(i);
        self.realise(&diff, params, &inner, depth + 1);
        self.line(depth, "}");
    }
}

/// Source text of a program whose advance count is `q` at every nonnegative point.
pub fn counting_nest_source(q: &PolynomialSpec) -> Result<String, GenError> {
    let mut w = NestWriter { next: 0, out: String::new() };
    for v in &q.variables {
        w.line(0, &format!("param {v} >= 0;"));
    }
    w.line(0, "clocked finish {");
    w.realise(&q.to_poly(), &q.variables, &[], 1);
    w.line(0, "}");
    Ok(w.out)
}

pub fn generate_counting_nest(q: &PolynomialSpec) -> Result<Program, GenError> {
    Ok(load(&counting_nest_source(q)?)?)
}

/// Source text of the race test for `p1 - p2` over the box `[1, B]^n`.
pub fn race_test_source(p1: &PolynomialSpec, p2: &PolynomialSpec) -> Result<String, GenError> {
    if p1.variables != p2.variables {
        return Err(GenError::VariableMismatch(p1.variables.clone(), p2.variables.clone()));
    }
    let mut w = NestWriter { next: 0, out: String::new() };
    w.line(0, "param B >= 1;");
    w.line(0, "array u[0];");
    w.line(0, "array out[0];");
    let n = p1.variables.len();
    for (k, v) in p1.variables.iter().enumerate() {
        w.line(k, &format!("for ({v} = 1 : B) {{"));
    }
    w.line(n, "clocked finish {");
    w.line(n + 1, "clocked async {");
    w.realise(&p1.to_poly(), &[], &p1.variables, n + 2);
    w.line(n + 2, "u = U();");
    w.line(n + 1, "}");
    w.line(n + 1, "clocked async {");
    w.realise(&p2.to_poly(), &[], &p2.variables, n + 2);
    w.line(n + 2, "out = G(u);");
    w.line(n + 1, "}");
    w.line(n, "}");
    for k in (0..n).rev() {
        w.line(k, "}");
    }
    Ok(w.out)
}

pub fn generate_race_test(p1: &PolynomialSpec, p2: &PolynomialSpec) -> Result<Program, GenError> {
    Ok(load(&race_test_source(p1, p2)?)?)
}

/// Split `p1(e x) - p2(e x)` into its positive and negative parts for every
/// sign vector `e`. The first entry is the positive orthant.
pub fn sign_variants(p1: &PolynomialSpec, p2: &PolynomialSpec) -> Result<Vec<(Vec<i8>, PolynomialSpec, PolynomialSpec)>, GenError> {
    if p1.variables != p2.variables {
        return Err(GenError::VariableMismatch(p1.variables.clone(), p2.variables.clone()));
    }
    let n = p1.variables.len();
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        let signs: Vec<i8> = (0..n).map(|k| if mask >> k & 1 == 1 { -1 } else { 1 }).collect();
        let mut total: BTreeMap<Vec<u32>, i128> = BTreeMap::new();
        for (spec, sgn) in [(p1, 1i128), (p2, -1i128)] {
            for (e, c) in &spec.monomials {
                let odd: u32 = e.iter().zip(&signs).filter(|(_, s)| **s < 0).map(|(k, _)| *k).sum();
                let s = if odd % 2 == 1 { -1 } else { 1 };
                *total.entry(e.clone()).or_default() += sgn * s * *c as i128;
            }
        }
        let part = |pos: bool| PolynomialSpec {
            variables: p1.variables.clone(),
            monomials: total
                .iter()
                .filter(|(_, c)| if pos { **c > 0 } else { **c < 0 })
                .map(|(e, c)| (e.clone(), c.unsigned_abs() as u64))
                .collect(),
        };
        out.push((signs, part(true), part(false)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::{explore, Limits};

    #[test]
    fn parses_monomials() {
        let q = PolynomialSpec::parse("x^2+x*y+ 3*y^2 + 2").unwrap();
        assert_eq!(q.variables, vec!["x", "y"]);
        assert_eq!(q.monomials[&vec![2, 0]], 1);
        assert_eq!(q.monomials[&vec![0, 2]], 3);
        assert_eq!(q.monomials[&vec![0, 0]], 2);
        assert!(matches!(PolynomialSpec::parse("x-1"), Err(GenError::NegativeCoefficient(_))));
        assert!(PolynomialSpec::parse("x+").is_err());
    }

    #[test]
    fn constant_and_linear_nests() {
        let src = counting_nest_source(&PolynomialSpec::parse("3").unwrap()).unwrap();
        assert_eq!(src.matches("advance;").count(), 3);
        assert!(!src.contains("for"));
        let src = counting_nest_source(&PolynomialSpec::parse("x").unwrap()).unwrap();
        assert_eq!(src.matches("for").count(), 1);
        assert_eq!(src.matches("advance;").count(), 1);
    }

    #[test]
    fn worked_nest_shape() {
        let src = counting_nest_source(&PolynomialSpec::parse("x^2+x*y+y^2").unwrap()).unwrap();
        assert_eq!(src.matches("for").count(), 5, "{src}");
        let p = load(&src).unwrap();
        let params: BTreeMap<String, i64> = [("x".to_string(), 2), ("y".to_string(), 3)].into();
        let f = explore(&p, &params, Limits::default()).unwrap();
        assert_eq!(f.advances, 4 + 6 + 9);
    }

    #[test]
    fn orthants() {
        let p1 = PolynomialSpec::parse("x^2").unwrap().extend_variables(&["y".into()]);
        let p2 = PolynomialSpec::parse_with("2*y", &["x".into()]).unwrap();
        let v = sign_variants(&p1, &p2).unwrap();
        assert_eq!(v.len(), 4);
        // y -> -y turns x^2 - 2y into x^2 + 2y
        let (_, a, b) = &v[2];
        assert_eq!(a.monomials.len(), 2);
        assert!(b.monomials.is_empty());
    }
}
