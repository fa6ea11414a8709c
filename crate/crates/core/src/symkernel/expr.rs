use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num::{BigInt, BigRational, One, Signed, Zero};

use super::poly::{gcd, Monomial, Poly, Var};
use super::table::SymbolTable;

/// Exact rational function `num / den` in normal form: the two parts are
/// coprime and `den` is monic under the graded-lex order. Equality of
/// normal forms is equality of functions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Expr {
    num: Poly,
    den: Poly,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SubstError {
    #[error("substitution rules are cyclic through symbol #{0}")]
    Cyclic(Var),
    #[error("substitution produced a zero denominator")]
    ZeroDenominator,
}

impl Default for Expr {
    fn default() -> Self {
        Expr::zero()
    }
}

impl From<BigRational> for Expr {
    fn from(c: BigRational) -> Self {
        Expr::constant(c)
    }
}

impl From<Poly> for Expr {
    fn from(p: Poly) -> Self {
        Expr {
            num: p,
            den: Poly::one(),
        }
    }
}

impl Expr {
    pub fn zero() -> Self {
        Expr::from(Poly::zero())
    }

    pub fn one() -> Self {
        Expr::from(Poly::one())
    }

    pub fn constant(c: BigRational) -> Self {
        Expr::from(Poly::constant(c))
    }

    pub fn int(n: i64) -> Self {
        Expr::from(Poly::from_int(n))
    }

    pub fn rational(n: i64, d: i64) -> Self {
        Expr::constant(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn var(v: Var) -> Self {
        Expr::from(Poly::var(v))
    }

    /// Builds `num / den` in normal form; `None` when `den` is zero.
    pub fn ratio(num: Poly, den: Poly) -> Option<Self> {
        if den.is_zero() {
            return None;
        }
        if num.is_zero() {
            return Some(Expr::zero());
        }
        if let Some(c) = den.as_constant() {
            return Some(Expr::from(num.scale(&c.recip())));
        }
        let g = gcd(&num, &den);
        let (mut n, mut d) = if g.is_one() {
            (num, den)
        } else {
            (num.div_exact(&g).unwrap(), den.div_exact(&g).unwrap())
        };
        let lc = d.leading_coeff();
        if !lc.is_one() {
            let inv = lc.recip();
            n = n.scale(&inv);
            d = d.scale(&inv);
        }
        if let Some(c) = d.as_constant() {
            return Some(Expr::from(n.scale(&c.recip())));
        }
        Some(Expr { num: n, den: d })
    }

    pub fn numer(&self) -> &Poly {
        &self.num
    }

    pub fn denom(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one() && self.num.is_one()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<BigRational> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    pub fn is_constant(&self) -> bool {
        self.as_constant().is_some()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        let mut v = self.num.vars();
        v.extend(self.den.vars());
        v
    }

    pub fn contains_var(&self, v: Var) -> bool {
        self.num.contains_var(v) || self.den.contains_var(v)
    }

    pub fn contains_any(&self, vars: &BTreeSet<Var>) -> bool {
        self.vars().iter().any(|v| vars.contains(v))
    }

    /// Degree in `v`: numerator degree minus denominator degree.
    pub fn degree_in(&self, v: Var) -> i64 {
        self.num.degree_in(v) as i64 - self.den.degree_in(v) as i64
    }

    pub fn checked_div(&self, other: &Expr) -> Option<Expr> {
        if other.is_zero() {
            return None;
        }
        Expr::ratio(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn recip(&self) -> Option<Expr> {
        Expr::one().checked_div(self)
    }

    pub fn scale(&self, k: &BigRational) -> Expr {
        if k.is_zero() {
            return Expr::zero();
        }
        Expr {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    pub fn pow(&self, e: u32) -> Expr {
        Expr {
            num: self.num.pow(e),
            den: self.den.pow(e),
        }
    }

    pub fn diff(&self, v: Var) -> Expr {
        if self.den.is_one() {
            return Expr::from(self.num.derivative(v));
        }
        let dn = self.num.derivative(v);
        let dd = self.den.derivative(v);
        if dd.is_zero() {
            return Expr::ratio(dn, self.den.clone()).unwrap();
        }
        let top = dn.mul(&self.den).sub(&self.num.mul(&dd));
        Expr::ratio(top, self.den.mul(&self.den)).unwrap()
    }

    /// Simultaneous substitution. Rules whose right-hand sides mention
    /// another rule's symbol (or their own) are rejected as cyclic.
    pub fn substitute(&self, rules: &BTreeMap<Var, Expr>) -> Result<Expr, SubstError> {
        check_acyclic(rules)?;
        self.substitute_unchecked(rules)
    }

    /// Simultaneous substitution without the cycle check.
    pub fn substitute_unchecked(&self, rules: &BTreeMap<Var, Expr>) -> Result<Expr, SubstError> {
        if rules.is_empty() || !self.vars().iter().any(|v| rules.contains_key(v)) {
            return Ok(self.clone());
        }
        let n = eval_poly(&self.num, rules);
        if self.den.is_one() {
            return Ok(n);
        }
        let d = eval_poly(&self.den, rules);
        n.checked_div(&d).ok_or(SubstError::ZeroDenominator)
    }

    pub fn subs_var(&self, v: Var, e: &Expr) -> Expr {
        let mut rules = BTreeMap::new();
        rules.insert(v, e.clone());
        self.substitute_unchecked(&rules)
            .expect("single substitution into a polynomial denominator")
    }

    pub fn eval_f64(&self, f: &dyn Fn(Var) -> f64) -> f64 {
        self.num.eval_f64(f) / self.den.eval_f64(f)
    }

    pub fn display<'a>(&'a self, table: &'a SymbolTable) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, table }
    }

    pub fn to_string_with(&self, table: &SymbolTable) -> String {
        self.display(table).to_string()
    }
}

fn eval_poly(p: &Poly, rules: &BTreeMap<Var, Expr>) -> Expr {
    let mut acc = Expr::zero();
    let mut cache: BTreeMap<(Var, u32), Expr> = BTreeMap::new();
    for (m, c) in p.terms() {
        let mut plain = Vec::new();
        let mut t = Expr::constant(c.clone());
        for &(v, e) in m.pairs() {
            match rules.get(&v) {
                Some(r) => {
                    let pw = cache.entry((v, e)).or_insert_with(|| r.pow(e)).clone();
                    t = &t * &pw;
                }
                None => plain.push((v, e)),
            }
        }
        if !plain.is_empty() {
            t = &t * &Expr::from(Poly::term(BigRational::one(), Monomial::from_pairs(plain)));
        }
        acc = &acc + &t;
    }
    acc
}

fn check_acyclic(rules: &BTreeMap<Var, Expr>) -> Result<(), SubstError> {
    // Depth-first search with colours: 0 unseen, 1 on stack, 2 done.
    let mut colour: BTreeMap<Var, u8> = BTreeMap::new();
    fn visit(
        v: Var,
        rules: &BTreeMap<Var, Expr>,
        colour: &mut BTreeMap<Var, u8>,
    ) -> Result<(), SubstError> {
        match colour.get(&v) {
            Some(1) => return Err(SubstError::Cyclic(v)),
            Some(2) => return Ok(()),
            _ => {}
        }
        colour.insert(v, 1);
        if let Some(rhs) = rules.get(&v) {
            for w in rhs.vars() {
                if rules.contains_key(&w) {
                    visit(w, rules, colour)?;
                }
            }
        }
        colour.insert(v, 2);
        Ok(())
    }
    for &v in rules.keys() {
        visit(v, rules, &mut colour)?;
    }
    Ok(())
}

fn combine(a: &Expr, b: &Expr, sub: bool) -> Expr {
    let op = |x: &Poly, y: &Poly| if sub { x.sub(y) } else { x.add(y) };
    if a.den == b.den {
        if a.den.is_one() {
            return Expr::from(op(&a.num, &b.num));
        }
        return Expr::ratio(op(&a.num, &b.num), a.den.clone()).unwrap();
    }
    let n = op(&a.num.mul(&b.den), &b.num.mul(&a.den));
    Expr::ratio(n, a.den.mul(&b.den)).unwrap()
}

impl Add for &Expr {
    type Output = Expr;
    fn add(self, rhs: &Expr) -> Expr {
        combine(self, rhs, false)
    }
}

impl Sub for &Expr {
    type Output = Expr;
    fn sub(self, rhs: &Expr) -> Expr {
        combine(self, rhs, true)
    }
}

impl Mul for &Expr {
    type Output = Expr;
    fn mul(self, rhs: &Expr) -> Expr {
        if self.den.is_one() && rhs.den.is_one() {
            return Expr::from(self.num.mul(&rhs.num));
        }
        Expr::ratio(self.num.mul(&rhs.num), self.den.mul(&rhs.den)).unwrap()
    }
}

impl Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Expr> for Expr {
            type Output = Expr;
            fn $m(self, rhs: &Expr) -> Expr {
                (&self).$m(rhs)
            }
        }
        impl $tr<Expr> for &Expr {
            type Output = Expr;
            fn $m(self, rhs: Expr) -> Expr {
                self.$m(&rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        -&self
    }
}

pub struct ExprDisplay<'a> {
    expr: &'a Expr,
    table: &'a SymbolTable,
}

fn write_monomial(out: &mut String, m: &Monomial, table: &SymbolTable) {
    for (i, &(v, e)) in m.pairs().iter().enumerate() {
        if i > 0 {
            out.push('*');
        }
        out.push_str(table.name(v));
        if e > 1 {
            out.push('^');
            out.push_str(&e.to_string());
        }
    }
}

pub(crate) fn poly_to_string(p: &Poly, table: &SymbolTable) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (i, (m, c)) in p.terms().enumerate() {
        let neg = c.is_negative();
        if i == 0 {
            if neg {
                out.push('-');
            }
        } else {
            out.push_str(if neg { " - " } else { " + " });
        }
        let a = c.abs();
        let (n, d) = (a.numer(), a.denom());
        if m.is_one() {
            out.push_str(&n.to_string());
            if !d.is_one() {
                out.push('/');
                out.push_str(&d.to_string());
            }
            continue;
        }
        if !n.is_one() {
            out.push_str(&n.to_string());
            out.push('*');
        }
        write_monomial(&mut out, m, table);
        if !d.is_one() {
            out.push('/');
            out.push_str(&d.to_string());
        }
    }
    out
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let e = self.expr;
        let num = poly_to_string(&e.num, self.table);
        if e.den.is_one() {
            return f.write_str(&num);
        }
        let den = poly_to_string(&e.den, self.table);
        let single_var = e.den.len() == 1
            && e.den
                .leading()
                .is_some_and(|(m, c)| c.is_one() && m.pairs().len() == 1);
        if e.num.len() > 1 {
            write!(f, "({num})")?;
        } else {
            f.write_str(&num)?;
        }
        if single_var {
            write!(f, "/{den}")
        } else {
            write!(f, "/({den})")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::SymbolKind;

    fn table() -> (SymbolTable, Var, Var) {
        let mut t = SymbolTable::new();
        let a = t.add("a", SymbolKind::Parameter).unwrap();
        let b = t.add("b", SymbolKind::Parameter).unwrap();
        (t, a, b)
    }

    #[test]
    fn rational_function_cancels() {
        let (_, a, b) = table();
        let x = Expr::var(a);
        let y = Expr::var(b);
        let num = (&x * &x) - (&y * &y);
        let den = &x - &y;
        assert_eq!(num.checked_div(&den).unwrap(), &x + &y);
    }

    #[test]
    fn quotient_rule() {
        let (_, a, _) = table();
        let x = Expr::var(a);
        let e = Expr::one().checked_div(&x).unwrap();
        let want = (-(&x * &x)).recip().unwrap();
        assert_eq!(e.diff(a), want);
    }

    #[test]
    fn display_is_readable() {
        let (t, a, b) = table();
        let x = Expr::var(a);
        let y = Expr::var(b);
        let e = &(&x * &x).scale(&BigRational::new(1.into(), 2.into())) - &y;
        assert_eq!(e.to_string_with(&t), "a^2/2 - b");
        let r = Expr::one().checked_div(&(&x + &y)).unwrap();
        assert_eq!(r.to_string_with(&t), "1/(a + b)");
    }

    #[test]
    fn cyclic_rules_rejected() {
        let (_, a, b) = table();
        let mut rules = BTreeMap::new();
        rules.insert(a, Expr::var(b));
        rules.insert(b, Expr::var(a));
        assert!(matches!(
            Expr::var(a).substitute(&rules),
            Err(SubstError::Cyclic(_))
        ));
    }
}
