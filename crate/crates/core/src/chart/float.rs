use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::symkernel::{to_f64, Expr, Monomial, Poly, SymbolTable, Var};

/// Polynomial with `f64` coefficients, used for charts with irrational
/// entries.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FloatPoly {
    terms: BTreeMap<Monomial, f64>,
}

impl FloatPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(v: Var) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::var(v), 1.0);
        p
    }

    pub fn from_poly(p: &Poly) -> Self {
        let mut out = Self::zero();
        for (m, c) in p.terms() {
            out.add_term(m.clone(), to_f64(c));
        }
        out
    }

    /// `None` when the denominator is not constant.
    pub fn from_expr(e: &Expr) -> Option<Self> {
        let d = e.denom().as_constant()?;
        Some(Self::from_poly(e.numer()).scale(1.0 / to_f64(&d)))
    }

    fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(m) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &f64)> {
        self.terms.iter().rev()
    }

    pub fn coefficient(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, o: &FloatPoly) -> FloatPoly {
        let mut out = self.clone();
        for (m, &c) in &o.terms {
            out.add_term(m.clone(), c);
        }
        out
    }

    pub fn sub(&self, o: &FloatPoly) -> FloatPoly {
        self.add(&o.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> FloatPoly {
        let mut out = Self::zero();
        for (m, &c) in &self.terms {
            out.add_term(m.clone(), c * k);
        }
        out
    }

    pub fn mul(&self, o: &FloatPoly) -> FloatPoly {
        let mut out = Self::zero();
        for (a, &x) in &self.terms {
            for (b, &y) in &o.terms {
                out.add_term(a.mul(b), x * y);
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> FloatPoly {
        (0..e).fold(Self::constant(1.0), |acc, _| acc.mul(self))
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.terms.keys().flat_map(|m| m.vars().collect::<Vec<_>>()).collect()
    }

    pub fn diff(&self, v: Var) -> FloatPoly {
        let mut out = Self::zero();
        for (m, &c) in &self.terms {
            let (rest, k) = m.split_var(v);
            if k == 0 {
                continue;
            }
            let lowered = if k == 1 {
                rest
            } else {
                rest.mul(&Monomial::from_pairs(vec![(v, k - 1)]))
            };
            out.add_term(lowered, c * k as f64);
        }
        out
    }

    /// Simultaneous substitution of polynomials for variables.
    pub fn substitute(&self, rules: &BTreeMap<Var, FloatPoly>) -> FloatPoly {
        let mut out = Self::zero();
        for (m, &c) in &self.terms {
            let mut t = Self::constant(c);
            for &(v, k) in m.pairs() {
                let f = rules.get(&v).cloned().unwrap_or_else(|| Self::var(v));
                t = t.mul(&f.pow(k));
            }
            out = out.add(&t);
        }
        out
    }

    pub fn eval(&self, f: &dyn Fn(Var) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, &c)| {
                c * m
                    .pairs()
                    .iter()
                    .map(|&(v, k)| f(v).powi(k as i32))
                    .product::<f64>()
            })
            .sum()
    }

    /// Drops coefficients below `tol` times the largest magnitude.
    pub fn cleaned(&self, tol: f64) -> FloatPoly {
        let scale = self.terms.values().fold(0.0f64, |a, c| a.max(c.abs())).max(1.0);
        FloatPoly {
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.abs() > tol * scale)
                .map(|(m, &c)| (m.clone(), c))
                .collect(),
        }
    }

    /// Term-by-term comparison within an absolute tolerance.
    pub fn approx_eq(&self, o: &FloatPoly, tol: f64) -> bool {
        let keys: BTreeSet<&Monomial> = self.terms.keys().chain(o.terms.keys()).collect();
        keys.into_iter()
            .all(|m| (self.coefficient(m) - o.coefficient(m)).abs() <= tol)
    }

    pub fn constant_term(&self) -> f64 {
        self.coefficient(&Monomial::one())
    }

    pub fn to_string_with(&self, table: &SymbolTable) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut s = String::new();
        for (i, (m, &c)) in self.terms().enumerate() {
            let neg = c < 0.0;
            let a = c.abs();
            if i == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mono: Vec<String> = m
                .pairs()
                .iter()
                .map(|&(v, k)| {
                    if k == 1 {
                        table.name(v).to_string()
                    } else {
                        format!("{}^{k}", table.name(v))
                    }
                })
                .collect();
            if mono.is_empty() {
                write!(s, "{}", fmt_float(a)).unwrap();
            } else if (a - 1.0).abs() < 1e-15 {
                s.push_str(&mono.join("*"));
            } else {
                write!(s, "{}*{}", fmt_float(a), mono.join("*")).unwrap();
            }
        }
        s
    }
}

/// Shortest round-trip rendering, with a trailing `.0` removed.
pub fn fmt_float(x: f64) -> String {
    let s = format!("{x}");
    s.strip_suffix(".0").map(str::to_string).unwrap_or(s)
}
