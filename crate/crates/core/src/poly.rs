//! Multivariate polynomials with rational coefficients.
//!
//! Used for advance-count functions: integer-valued on their domain, but
//! summation introduces denominators (e.g. `(k^2 + k)/2`).

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::Ratio;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::affine::AffineExpr;

pub type Rational = Ratio<i128>;

/// A monomial as a sparse exponent vector; absent variables have exponent 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Monomial(BTreeMap<String, u32>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn var(name: &str) -> Self {
        let mut m = BTreeMap::new();
        m.insert(name.to_string(), 1);
        Monomial(m)
    }

    pub fn degree(&self) -> u32 {
        self.0.values().sum()
    }

    pub fn exponent(&self, v: &str) -> u32 {
        self.0.get(v).copied().unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = (&str, u32)> {
        self.0.iter().map(|(v, e)| (v.as_str(), *e))
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = self.0.clone();
        for (v, e) in &other.0 {
            *out.entry(v.clone()).or_insert(0) += e;
        }
        Monomial(out)
    }

    fn without(&self, v: &str) -> Monomial {
        let mut m = self.0.clone();
        m.remove(v);
        Monomial(m)
    }
}

impl Ord for Monomial {
    /// Lexicographic comparison of exponent vectors over name-sorted variables.
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.0.iter().peekable();
        let mut b = other.0.iter().peekable();
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((va, ea)), Some((vb, eb))) => match va.cmp(vb) {
                    // `a` has a positive exponent on an earlier variable
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match ea.cmp(eb) {
                        Ordering::Equal => {
                            a.next();
                            b.next();
                        }
                        o => return o,
                    },
                },
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(v, &e)| if e == 1 { v.clone() } else { format!("{v}^{e}") })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

/// Polynomial with rational coefficients over named variables.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct QuasiPoly {
    terms: BTreeMap<Monomial, Rational>,
}

impl QuasiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: impl Into<Rational>) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c.into());
        p
    }

    pub fn int(c: i64) -> Self {
        Self::constant(Rational::from_integer(c as i128))
    }

    pub fn var(name: &str) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::var(name), Rational::one());
        p
    }

    pub fn from_affine(e: &AffineExpr) -> Self {
        let mut p = Self::int(e.constant);
        for (v, &c) in &e.terms {
            p.add_term(Monomial::var(v), Rational::from_integer(c as i128));
        }
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Rational)>) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        let slot = self.terms.entry(m.clone()).or_insert_with(Rational::zero);
        *slot += c;
        if slot.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn degree_in(&self, v: &str) -> u32 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    pub fn variables(&self) -> Vec<String> {
        let mut vs: Vec<String> = self.terms.keys().flat_map(|m| m.0.keys().cloned()).collect();
        vs.sort();
        vs.dedup();
        vs
    }

    pub fn scale(&self, k: Rational) -> QuasiPoly {
        QuasiPoly::from_terms(self.terms.iter().map(|(m, c)| (m.clone(), *c * k)))
    }

    pub fn pow(&self, e: u32) -> QuasiPoly {
        let mut out = QuasiPoly::int(1);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }

    /// Replace variable `v` by a polynomial.
    pub fn substitute(&self, v: &str, value: &QuasiPoly) -> QuasiPoly {
        let mut out = QuasiPoly::zero();
        let mut powers: Vec<QuasiPoly> = vec![QuasiPoly::int(1)];
        for (m, c) in &self.terms {
            let e = m.exponent(v) as usize;
            while powers.len() <= e {
                let next = powers.last().unwrap() * value;
                powers.push(next);
            }
            let rest = QuasiPoly::from_terms([(m.without(v), *c)]);
            out = out + &rest * &powers[e];
        }
        out
    }

    pub fn rename(&self, f: &dyn Fn(&str) -> String) -> QuasiPoly {
        QuasiPoly::from_terms(self.terms.iter().map(|(m, c)| {
            (Monomial(m.0.iter().map(|(v, e)| (f(v), *e)).collect()), *c)
        }))
    }

    /// Coefficients by power of `v`: `self == sum_k out[k] * v^k`.
    pub fn coefficients_in(&self, v: &str) -> Vec<QuasiPoly> {
        let mut out = vec![QuasiPoly::zero(); self.degree_in(v) as usize + 1];
        for (m, c) in &self.terms {
            out[m.exponent(v) as usize].add_term(m.without(v), *c);
        }
        out
    }

    /// Exact value; `None` if some variable is unbound.
    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<i64>) -> Option<Rational> {
        let mut acc = Rational::zero();
        for (m, c) in &self.terms {
            let mut t = *c;
            for (v, e) in m.vars() {
                let x = Rational::from_integer(lookup(v)? as i128);
                for _ in 0..e {
                    t *= x;
                }
            }
            acc += t;
        }
        Some(acc)
    }

    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Option<Rational> {
        self.eval_with(&|v| env.get(v).copied())
    }

    /// Integer value when it is one.
    pub fn eval_int(&self, env: &BTreeMap<String, i64>) -> Option<i128> {
        let r = self.eval(env)?;
        r.is_integer().then(|| r.to_integer())
    }

    /// The same polynomial with integer coefficients scaled by the lcm of denominators.
    pub fn integer_scaled(&self) -> (i128, Vec<(Monomial, i128)>) {
        let l = self
            .terms
            .values()
            .fold(1i128, |l, c| num_integer::lcm(l, *c.denom()));
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| (m.clone(), (c * Rational::from_integer(l)).to_integer()))
            .collect();
        (l, terms)
    }

    /// `Some` when degree <= 1 and all coefficients are integers.
    pub fn as_affine(&self) -> Option<AffineExpr> {
        let mut e = AffineExpr::zero();
        for (m, c) in &self.terms {
            if !c.is_integer() {
                return None;
            }
            let c = i64::try_from(c.to_integer()).ok()?;
            match m.degree() {
                0 => e.constant += c,
                1 => e.add_term(m.0.keys().next().unwrap().clone(), c),
                _ => return None,
            }
        }
        Some(e)
    }

    /// `sum_{v = lo}^{hi} self`, valid whenever `hi >= lo - 1`.
    pub fn sum_over(&self, v: &str, lo: &QuasiPoly, hi: &QuasiPoly) -> QuasiPoly {
        let mut out = QuasiPoly::zero();
        let below = lo - &QuasiPoly::int(1);
        for (k, coeff) in self.coefficients_in(v).iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            let f = power_sum(k as u32);
            let s = f.substitute(POWER_SUM_VAR, hi) - f.substitute(POWER_SUM_VAR, &below);
            out = out + coeff * &s;
        }
        out
    }
}

const POWER_SUM_VAR: &str = "\u{0}n";

/// Bernoulli numbers with `B_1 = -1/2`.
fn bernoulli(n: usize) -> Vec<Rational> {
    let mut b = vec![Rational::one()];
    for m in 1..=n {
        // sum_{j=0}^{m} C(m+1, j) B_j = 0
        let mut acc = Rational::zero();
        for (j, bj) in b.iter().enumerate() {
            acc += Rational::from_integer(binomial(m as i128 + 1, j as i128)) * bj;
        }
        b.push(-acc / Rational::from_integer(m as i128 + 1));
    }
    b
}

fn binomial(n: i128, k: i128) -> i128 {
    let mut r = 1i128;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Faulhaber polynomial `F_k(n) = sum_{x=1}^{n} x^k` in the variable `POWER_SUM_VAR`.
/// As a polynomial identity `F_k(n) - F_k(n-1) = n^k` for every integer `n`.
fn power_sum(k: u32) -> QuasiPoly {
    let b = bernoulli(k as usize);
    let n = QuasiPoly::var(POWER_SUM_VAR);
    let mut out = QuasiPoly::zero();
    for (j, bj) in b.iter().enumerate() {
        let bj = if j == 1 { -*bj } else { *bj };
        let coeff = Rational::from_integer(binomial(k as i128 + 1, j as i128)) * bj / Rational::from_integer(k as i128 + 1);
        out = out + n.pow(k + 1 - j as u32).scale(coeff);
    }
    out
}

impl fmt::Display for QuasiPoly {
    /// Canonical form: monomials in decreasing lexicographic order of their
    /// exponent vectors (variables sorted by name), e.g. `N*k + i - (1/2)*k^2 - (1/2)*k`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (m, c)) in self.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let coeff = if mag.is_integer() {
                mag.to_integer().to_string()
            } else {
                format!("({}/{})", mag.numer(), mag.denom())
            };
            if m.degree() == 0 {
                write!(f, "{coeff}")?;
            } else if mag.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{coeff}*{m}")?;
            }
        }
        Ok(())
    }
}

impl Serialize for QuasiPoly {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl Add for QuasiPoly {
    type Output = QuasiPoly;
    fn add(mut self, rhs: QuasiPoly) -> QuasiPoly {
        for (m, c) in rhs.terms {
            self.add_term(m, c);
        }
        self
    }
}

impl<'a> Add<&'a QuasiPoly> for &'a QuasiPoly {
    type Output = QuasiPoly;
    fn add(self, rhs: &QuasiPoly) -> QuasiPoly {
        self.clone() + rhs.clone()
    }
}

impl Neg for QuasiPoly {
    type Output = QuasiPoly;
    fn neg(self) -> QuasiPoly {
        self.scale(-Rational::one())
    }
}

impl Sub for QuasiPoly {
    type Output = QuasiPoly;
    fn sub(self, rhs: QuasiPoly) -> QuasiPoly {
        self + (-rhs)
    }
}

impl<'a> Sub<&'a QuasiPoly> for &'a QuasiPoly {
    type Output = QuasiPoly;
    fn sub(self, rhs: &QuasiPoly) -> QuasiPoly {
        self.clone() - rhs.clone()
    }
}

impl<'a> Mul<&'a QuasiPoly> for &'a QuasiPoly {
    type Output = QuasiPoly;
    fn mul(self, rhs: &QuasiPoly) -> QuasiPoly {
        let mut out = QuasiPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), *ca * *cb);
            }
        }
        out
    }
}

impl Mul for QuasiPoly {
    type Output = QuasiPoly;
    fn mul(self, rhs: QuasiPoly) -> QuasiPoly {
        &self * &rhs
    }
}
