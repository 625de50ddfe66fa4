//! Exact integer feasibility for conjunctions of affine constraints.
//!
//! Equalities are eliminated with unit-coefficient substitution or the
//! symmetric-modulo reduction, inequalities by Fourier-Motzkin with integer
//! shadows: an exact projection when one side has unit coefficients, otherwise
//! real shadow (necessary), dark shadow (sufficient) and, between the two,
//! enumeration of the grey-shadow splinters.

use std::collections::{BTreeMap, HashMap};

use super::expr::{Constraint, ConstraintKind};

/// Three-valued answer of an emptiness query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Emptiness {
    Empty,
    NonEmpty,
    Unknown,
}

impl Emptiness {
    pub fn is_empty(self) -> bool {
        self == Emptiness::Empty
    }
    pub fn is_nonempty(self) -> bool {
        self == Emptiness::NonEmpty
    }
}

/// Search-tree size after which the engine gives up with `Unknown`.
const NODE_BUDGET: usize = 200_000;
const MAX_DEPTH: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
struct Row {
    coef: Vec<i128>,
    c: i128,
}

impl Row {
    fn is_trivial(&self) -> bool {
        self.coef.iter().all(|&a| a == 0)
    }

    fn gcd(&self) -> i128 {
        self.coef.iter().fold(0i128, |g, &a| gcd(g, a))
    }

    fn add_scaled(&mut self, other: &Row, k: i128) {
        for (a, b) in self.coef.iter_mut().zip(&other.coef) {
            *a += k * b;
        }
        self.c += k * other.c;
    }

    fn widen(&mut self, n: usize) {
        self.coef.resize(n, 0);
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn floor_div(a: i128, b: i128) -> i128 {
    a.div_euclid(b)
}

/// `a mod^ b`: the representative of `a` modulo `b` in `(-b/2, b/2]`.
fn mod_hat(a: i128, b: i128) -> i128 {
    a - b * floor_div(2 * a + b, 2 * b)
}

#[derive(Clone, Debug)]
struct Problem {
    nvars: usize,
    eqs: Vec<Row>,
    geqs: Vec<Row>,
}

enum Norm {
    Infeasible,
    Ok,
}

impl Problem {
    fn normalize(&mut self) -> Norm {
        let mut eqs = Vec::with_capacity(self.eqs.len());
        for mut r in std::mem::take(&mut self.eqs) {
            if r.is_trivial() {
                if r.c != 0 {
                    return Norm::Infeasible;
                }
                continue;
            }
            let g = r.gcd();
            if r.c % g != 0 {
                return Norm::Infeasible;
            }
            r.coef.iter_mut().for_each(|a| *a /= g);
            r.c /= g;
            eqs.push(r);
        }
        self.eqs = eqs;

        // Keep the tightest constant per coefficient vector, detect opposite pairs.
        let mut best: HashMap<Vec<i128>, i128> = HashMap::new();
        for mut r in std::mem::take(&mut self.geqs) {
            if r.is_trivial() {
                if r.c < 0 {
                    return Norm::Infeasible;
                }
                continue;
            }
            let g = r.gcd();
            r.coef.iter_mut().for_each(|a| *a /= g);
            r.c = floor_div(r.c, g);
            best.entry(r.coef)
                .and_modify(|c| *c = (*c).min(r.c))
                .or_insert(r.c);
        }
        let mut geqs = Vec::with_capacity(best.len());
        let mut promoted = Vec::new();
        for (coef, c) in &best {
            let neg: Vec<i128> = coef.iter().map(|a| -a).collect();
            if let Some(&c2) = best.get(&neg) {
                if c + c2 < 0 {
                    return Norm::Infeasible;
                }
                if c + c2 == 0 {
                    // a.x + c >= 0 and -a.x - c >= 0
                    if coef.iter().find(|&&a| a != 0).copied().unwrap_or(0) > 0 {
                        promoted.push(Row {
                            coef: coef.clone(),
                            c: *c,
                        });
                    }
                    continue;
                }
            }
            geqs.push(Row {
                coef: coef.clone(),
                c: *c,
            });
        }
        geqs.sort_by(|a, b| a.coef.cmp(&b.coef).then(a.c.cmp(&b.c)));
        self.geqs = geqs;
        self.eqs.extend(promoted);
        Norm::Ok
    }

    /// Substitute `x_k = row` (row gives x_k as an affine form with coef[k] == 0).
    fn substitute(&mut self, k: usize, value: &Row) {
        for r in self.eqs.iter_mut().chain(self.geqs.iter_mut()) {
            let a = r.coef[k];
            if a != 0 {
                r.coef[k] = 0;
                r.add_scaled(value, a);
            }
        }
    }

    fn add_var(&mut self) -> usize {
        self.nvars += 1;
        for r in self.eqs.iter_mut().chain(self.geqs.iter_mut()) {
            r.widen(self.nvars);
        }
        self.nvars - 1
    }
}

struct Solver {
    nodes: usize,
}

impl Solver {
    fn solve(&mut self, mut p: Problem, depth: usize) -> Emptiness {
        self.nodes += 1;
        if self.nodes > NODE_BUDGET || depth > MAX_DEPTH {
            return Emptiness::Unknown;
        }
        loop {
            if let Norm::Infeasible = p.normalize() {
                return Emptiness::Empty;
            }
            if p.eqs.is_empty() {
                break;
            }
            self.eliminate_equality(&mut p);
        }
        self.solve_inequalities(p, depth)
    }

    fn eliminate_equality(&mut self, p: &mut Problem) {
        // Pick the equality/variable with the smallest nonzero |coefficient|.
        let (ei, k) = {
            let mut best: Option<(usize, usize, i128)> = None;
            for (i, r) in p.eqs.iter().enumerate() {
                for (j, &a) in r.coef.iter().enumerate() {
                    if a != 0 && best.map_or(true, |(_, _, m)| a.abs() < m) {
                        best = Some((i, j, a.abs()));
                    }
                }
            }
            let (i, j, _) = best.expect("nontrivial equality");
            (i, j)
        };
        let eq = p.eqs[ei].clone();
        let a_k = eq.coef[k];
        if a_k.abs() == 1 {
            // x_k = -(rest)/a_k
            let mut value = eq.clone();
            value.coef[k] = 0;
            let s = -a_k;
            value.coef.iter_mut().for_each(|a| *a *= s);
            value.c *= s;
            p.eqs.remove(ei);
            p.substitute(k, &value);
            return;
        }
        // Symmetric-modulo step: introduce sigma with m*sigma = sum (a_i mod^ m) x_i + (c mod^ m).
        let m = a_k.abs() + 1;
        let sigma = p.add_var();
        let eq = p.eqs[ei].clone();
        let sign = a_k.signum();
        let mut value = Row {
            coef: vec![0; p.nvars],
            c: 0,
        };
        // (a_k mod^ m) == -sign, hence x_k = sign * (sum_{i != k} (a_i mod^ m) x_i + (c mod^ m) - m*sigma)
        for (i, &a) in eq.coef.iter().enumerate() {
            if i != k && a != 0 {
                value.coef[i] = sign * mod_hat(a, m);
            }
        }
        value.coef[sigma] = -sign * m;
        value.c = sign * mod_hat(eq.c, m);
        p.substitute(k, &value);
    }

    fn solve_inequalities(&mut self, mut p: Problem, depth: usize) -> Emptiness {
        loop {
            if p.geqs.is_empty() {
                return Emptiness::NonEmpty;
            }
            // Drop variables bounded on one side only: their constraints are always satisfiable.
            let mut dropped = false;
            for v in 0..p.nvars {
                let lower = p.geqs.iter().any(|r| r.coef[v] > 0);
                let upper = p.geqs.iter().any(|r| r.coef[v] < 0);
                if lower != upper {
                    p.geqs.retain(|r| r.coef[v] == 0);
                    dropped = true;
                }
            }
            if !dropped {
                break;
            }
        }
        if p.geqs.is_empty() {
            return Emptiness::NonEmpty;
        }

        // Choose the elimination variable: exact projections first, then fewest pairs.
        let mut choice: Option<(usize, bool, usize)> = None;
        for v in 0..p.nvars {
            let lows: Vec<i128> = p.geqs.iter().filter(|r| r.coef[v] > 0).map(|r| r.coef[v]).collect();
            let ups: Vec<i128> = p.geqs.iter().filter(|r| r.coef[v] < 0).map(|r| -r.coef[v]).collect();
            if lows.is_empty() {
                continue;
            }
            let exact = lows.iter().all(|&a| a == 1) || ups.iter().all(|&b| b == 1);
            let pairs = lows.len() * ups.len();
            let better = match choice {
                None => true,
                Some((_, ex, pr)) => (exact && !ex) || (exact == ex && pairs < pr),
            };
            if better {
                choice = Some((v, exact, pairs));
            }
        }
        let Some((v, exact, _)) = choice else {
            return Emptiness::NonEmpty;
        };

        let (lowers, uppers, rest): (Vec<Row>, Vec<Row>, Vec<Row>) = {
            let mut lo = Vec::new();
            let mut up = Vec::new();
            let mut rest = Vec::new();
            for r in &p.geqs {
                match r.coef[v].signum() {
                    1 => lo.push(r.clone()),
                    -1 => up.push(r.clone()),
                    _ => rest.push(r.clone()),
                }
            }
            (lo, up, rest)
        };

        let shadow = |dark: bool| -> Problem {
            let mut geqs = rest.clone();
            for l in &lowers {
                let a = l.coef[v];
                for u in &uppers {
                    let b = -u.coef[v];
                    // a x + e1 >= 0, -b x + e2 >= 0  =>  b e1 + a e2 >= 0
                    let mut row = Row {
                        coef: vec![0; p.nvars],
                        c: 0,
                    };
                    row.add_scaled(l, b);
                    row.add_scaled(u, a);
                    row.coef[v] = 0;
                    if dark {
                        row.c -= (a - 1) * (b - 1);
                    }
                    geqs.push(row);
                }
            }
            Problem {
                nvars: p.nvars,
                eqs: Vec::new(),
                geqs,
            }
        };

        if exact {
            return self.solve(shadow(false), depth + 1);
        }
        match self.solve(shadow(false), depth + 1) {
            Emptiness::Empty => return Emptiness::Empty,
            Emptiness::Unknown => return Emptiness::Unknown,
            Emptiness::NonEmpty => {}
        }
        match self.solve(shadow(true), depth + 1) {
            Emptiness::NonEmpty => return Emptiness::NonEmpty,
            Emptiness::Unknown => return Emptiness::Unknown,
            Emptiness::Empty => {}
        }
        // Grey shadow: any integer solution outside the dark shadow lies close to a lower bound.
        let m = uppers.iter().map(|u| -u.coef[v]).max().unwrap_or(1);
        let mut unknown = false;
        for l in &lowers {
            let a = l.coef[v];
            let top = floor_div(m * a - a - m, m);
            for i in 0..=top.max(-1) {
                let mut q = p.clone();
                let mut eq = l.clone();
                eq.c -= i;
                q.eqs.push(eq);
                match self.solve(q, depth + 1) {
                    Emptiness::NonEmpty => return Emptiness::NonEmpty,
                    Emptiness::Unknown => unknown = true,
                    Emptiness::Empty => {}
                }
            }
        }
        if unknown {
            Emptiness::Unknown
        } else {
            Emptiness::Empty
        }
    }
}

/// Decide integer feasibility of a conjunction of constraints.
/// Variables are all names mentioned by the constraints; all range over Z.
pub fn conjunction_emptiness(constraints: &[Constraint]) -> Emptiness {
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for c in constraints {
        for v in c.expr.vars() {
            let n = index.len();
            index.entry(v).or_insert(n);
        }
    }
    let n = index.len();
    let mut p = Problem {
        nvars: n,
        eqs: Vec::new(),
        geqs: Vec::new(),
    };
    for c in constraints {
        let mut row = Row {
            coef: vec![0; n],
            c: c.expr.constant as i128,
        };
        for (v, &k) in &c.expr.terms {
            row.coef[index[v.as_str()]] = k as i128;
        }
        match c.kind {
            ConstraintKind::Zero => p.eqs.push(row),
            ConstraintKind::NonNeg => p.geqs.push(row),
        }
    }
    Solver { nodes: 0 }.solve(p, 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::affine::expr::AffineExpr;

    fn v(n: &str) -> AffineExpr {
        AffineExpr::var(n)
    }
    fn k(c: i64) -> AffineExpr {
        AffineExpr::constant(c)
    }

    #[test]
    fn mod_hat_range() {
        assert_eq!(mod_hat(3, 4), -1);
        assert_eq!(mod_hat(-3, 4), 1);
        assert_eq!(mod_hat(2, 4), -2);
        assert_eq!(mod_hat(5, 4), 1);
    }

    #[test]
    fn trivial_contradiction() {
        let cs = vec![Constraint::ge(&v("x"), &k(0)), Constraint::le(&v("x"), &k(-1))];
        assert_eq!(conjunction_emptiness(&cs), Emptiness::Empty);
    }

    #[test]
    fn parity_equality() {
        let cs = vec![Constraint::eq(&v("t").scale(2), &v("u").scale(2).plus_const(1))];
        assert_eq!(conjunction_emptiness(&cs), Emptiness::Empty);
    }

    #[test]
    fn non_unit_equalities_need_the_modulo_step() {
        // 3x + 5y = 1 has integer solutions (x=2, y=-1)
        let cs = vec![Constraint::eq(&v("x").scale(3).add(&v("y").scale(5)), &k(1))];
        assert_eq!(conjunction_emptiness(&cs), Emptiness::NonEmpty);
        // with 0 <= x,y <= 1 it does not
        let mut cs2 = cs.clone();
        for n in ["x", "y"] {
            cs2.push(Constraint::ge(&v(n), &k(0)));
            cs2.push(Constraint::le(&v(n), &k(1)));
        }
        assert_eq!(conjunction_emptiness(&cs2), Emptiness::Empty);
    }

    #[test]
    fn dark_shadow_gap() {
        // 1 <= 3x - 2y... classic: 27 <= 11x + 13y <= 45, -10 <= 7x - 9y <= 4 has no integer point
        let e1 = v("x").scale(11).add(&v("y").scale(13));
        let e2 = v("x").scale(7).sub(&v("y").scale(9));
        let cs = vec![
            Constraint::ge(&e1, &k(27)),
            Constraint::le(&e1, &k(45)),
            Constraint::ge(&e2, &k(-10)),
            Constraint::le(&e2, &k(4)),
        ];
        assert_eq!(conjunction_emptiness(&cs), Emptiness::Empty);
    }

    #[test]
    fn unbounded_feasible() {
        let cs = vec![Constraint::ge(&v("N"), &k(2)), Constraint::le(&v("i"), &v("N").plus_const(-1)), Constraint::ge(&v("i"), &k(1))];
        assert_eq!(conjunction_emptiness(&cs), Emptiness::NonEmpty);
    }
}
