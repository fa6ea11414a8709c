//! Lagrangian-side reductions down to a first-order Hamiltonian system.

mod registry;

use std::collections::{BTreeMap, BTreeSet};

use num::{BigInt, BigRational};

use crate::error::{Error, Result};
use crate::linalg::{null_space, reduce_augmented, ExprMatrix};
use crate::symkernel::{Expr, Poly, SymbolKind, SymbolTable, Var};

pub use registry::{Reduced, Reduction, ReductionRegistry};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LagrangianSystem {
    pub coordinates: Vec<Var>,
    /// Momentum name for each coordinate, used by the Legendre transform.
    pub momentum_names: Vec<String>,
    pub order: u8,
    pub lagrangian: Expr,
}

/// Canonical pairs in the fixed layout `(z^i, z^{n+i}) = (q^i, p_i)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhaseSpace {
    pairs: Vec<(Var, Var)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FirstOrderSystem {
    pub phase: PhaseSpace,
    pub hamiltonian: Expr,
    pub primaries: Vec<Expr>,
    /// Momentum symbol and its definition in Lagrangian variables.
    pub momentum_defs: Vec<(Var, Expr)>,
    /// Non-constant pivots used while inverting the momenta.
    pub pivots: Vec<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CounterTerm {
    pub w: Expr,
    pub reduced: LagrangianSystem,
}

/// Default momentum name: a leading `q` becomes `p`, anything else gets a
/// `p_` prefix.
pub fn momentum_name(q: &str) -> String {
    match q.strip_prefix('q') {
        Some(rest) => format!("p{rest}"),
        None => format!("p_{q}"),
    }
}

impl PhaseSpace {
    pub fn new(pairs: Vec<(Var, Var)>) -> Self {
        PhaseSpace { pairs }
    }

    pub fn pairs(&self) -> &[(Var, Var)] {
        &self.pairs
    }

    pub fn n(&self) -> usize {
        self.pairs.len()
    }

    pub fn positions(&self) -> impl Iterator<Item = Var> + '_ {
        self.pairs.iter().map(|p| p.0)
    }

    pub fn momenta(&self) -> impl Iterator<Item = Var> + '_ {
        self.pairs.iter().map(|p| p.1)
    }

    /// Symbols in symplectic layout order.
    pub fn z(&self) -> Vec<Var> {
        self.positions().chain(self.momenta()).collect()
    }

    pub fn vars(&self) -> BTreeSet<Var> {
        self.z().into_iter().collect()
    }

    /// Index in the `z` layout.
    pub fn index_of(&self, v: Var) -> Option<usize> {
        let n = self.n();
        self.pairs.iter().enumerate().find_map(|(i, &(q, p))| {
            if q == v {
                Some(i)
            } else if p == v {
                Some(n + i)
            } else {
                None
            }
        })
    }
}

fn time_symbol(table: &SymbolTable) -> Option<Var> {
    table
        .get("t")
        .filter(|&t| table.kind(t) == SymbolKind::Time)
}

impl LagrangianSystem {
    /// Validates that `lagrangian` only mentions the coordinates, their
    /// derivatives up to `order`, parameters and time; order-2 systems must
    /// be affine in accelerations.
    pub fn new(
        coordinates: Vec<Var>,
        order: u8,
        lagrangian: Expr,
        table: &SymbolTable,
    ) -> Result<Self> {
        let names = coordinates
            .iter()
            .map(|&q| momentum_name(table.name(q)))
            .collect();
        Self::with_momenta(coordinates, names, order, lagrangian, table)
    }

    pub fn with_momenta(
        coordinates: Vec<Var>,
        momentum_names: Vec<String>,
        order: u8,
        lagrangian: Expr,
        table: &SymbolTable,
    ) -> Result<Self> {
        if !(1..=2).contains(&order) {
            return Err(Error::Input(format!("order must be 1 or 2, got {order}")));
        }
        if momentum_names.len() != coordinates.len() {
            return Err(Error::Input("one momentum name per coordinate".into()));
        }
        let mut allowed = BTreeSet::new();
        for &q in &coordinates {
            if table.kind(q) != SymbolKind::Position {
                return Err(Error::Input(format!("`{}` is not a position", table.name(q))));
            }
            allowed.insert(q);
            allowed.insert(table.velocity(q).unwrap());
            if order == 2 {
                allowed.insert(table.acceleration(q).unwrap());
            }
        }
        for v in lagrangian.vars() {
            let k = table.kind(v);
            if !(allowed.contains(&v) || k == SymbolKind::Parameter || k == SymbolKind::Time) {
                return Err(Error::Input(format!(
                    "Lagrangian mentions `{}`, which is not allowed at order {order}",
                    table.name(v)
                )));
            }
        }
        let sys = LagrangianSystem {
            coordinates,
            momentum_names,
            order,
            lagrangian,
        };
        if order == 2 {
            let acc = sys.accelerations(table);
            let l = &sys.lagrangian;
            if l.denom().vars().iter().any(|v| acc.contains(v))
                || l.numer().degree_in_set(&acc.iter().copied().collect()) > 1
            {
                return Err(Error::Unsupported(
                    "order-2 Lagrangian must be affine in the accelerations".into(),
                ));
            }
        }
        Ok(sys)
    }

    pub fn velocities(&self, table: &SymbolTable) -> Vec<Var> {
        self.coordinates
            .iter()
            .map(|&q| table.velocity(q).unwrap())
            .collect()
    }

    pub fn accelerations(&self, table: &SymbolTable) -> Vec<Var> {
        self.coordinates
            .iter()
            .map(|&q| table.acceleration(q).unwrap())
            .collect()
    }

    /// `L = Σ f_i a^i + g` with `f`, `g` acceleration-free.
    fn decompose(&self, table: &SymbolTable) -> (Vec<Expr>, Expr) {
        let acc = self.accelerations(table);
        let f: Vec<Expr> = acc.iter().map(|&a| self.lagrangian.diff(a)).collect();
        let zero: BTreeMap<Var, Expr> = acc.iter().map(|&a| (a, Expr::zero())).collect();
        let g = self.lagrangian.substitute_unchecked(&zero).unwrap();
        (f, g)
    }
}

/// Total time derivative of an acceleration-free expression.
fn total_derivative(e: &Expr, coords: &[Var], table: &SymbolTable) -> Expr {
    let mut out = Expr::zero();
    for &q in coords {
        let v = table.velocity(q).unwrap();
        let a = table.acceleration(q).unwrap();
        out = &out + &(e.diff(q) * Expr::var(v));
        out = &out + &(e.diff(v) * Expr::var(a));
    }
    if let Some(t) = time_symbol(table) {
        out = &out + &e.diff(t);
    }
    out
}

pub fn kinetic_matrix(sys: &LagrangianSystem, table: &SymbolTable) -> Result<ExprMatrix> {
    if sys.order != 1 {
        return Err(Error::Precondition(
            "kinetic matrix needs an order-1 system; reduce it first".into(),
        ));
    }
    let vs = sys.velocities(table);
    let first: Vec<Expr> = vs.iter().map(|&v| sys.lagrangian.diff(v)).collect();
    Ok(ExprMatrix::from_fn(vs.len(), vs.len(), |i, j| first[i].diff(vs[j])))
}

fn register_momenta(sys: &LagrangianSystem, table: &mut SymbolTable) -> Result<Vec<Var>> {
    sys.momentum_names
        .iter()
        .map(|n| {
            table
                .add(n, SymbolKind::Momentum)
                .map_err(|e| Error::Input(format!("momentum `{n}`: {e}")))
        })
        .collect()
}

/// Legendre transform of an order-1 Lagrangian at most quadratic in the
/// velocities. Each kernel direction τ of the kinetic matrix yields the
/// primary `τ·(p − b(q))`, where `p = K v + b`. Degenerate velocities are
/// set to zero; pivots are taken from the trailing velocities first.
pub fn legendre(sys: &LagrangianSystem, table: &mut SymbolTable) -> Result<FirstOrderSystem> {
    if sys.order != 1 {
        return Err(Error::Precondition(
            "Legendre transform needs an order-1 system".into(),
        ));
    }
    let vs = sys.velocities(table);
    let vset: BTreeSet<Var> = vs.iter().copied().collect();
    let l = &sys.lagrangian;
    if l.denom().vars().iter().any(|v| vset.contains(v)) || l.numer().degree_in_set(&vset) > 2 {
        return Err(Error::Unsupported(
            "Lagrangian is not quadratic in the velocities; momentum inversion would be nonlinear"
                .into(),
        ));
    }
    let ps = register_momenta(sys, table)?;
    let n = vs.len();
    let k = kinetic_matrix(sys, table)?;
    let at_rest: BTreeMap<Var, Expr> = vs.iter().map(|&v| (v, Expr::zero())).collect();
    let momenta_def: Vec<Expr> = vs.iter().map(|&v| l.diff(v)).collect();
    let b: Vec<Expr> = momenta_def
        .iter()
        .map(|e| e.substitute_unchecked(&at_rest).unwrap())
        .collect();
    let shifted: Vec<Expr> = (0..n).map(|i| Expr::var(ps[i]) - &b[i]).collect();

    let primaries = null_space(&k)
        .iter()
        .map(|tau| {
            tau.iter()
                .zip(&shifted)
                .fold(Expr::zero(), |acc, (t, s)| &acc + &(t * s))
        })
        .collect();

    let order: Vec<usize> = (0..n).rev().collect();
    let flipped = ExprMatrix::from_fn(n, n, |i, j| k.get(order[i], order[j]).clone());
    let rhs: Vec<Expr> = order.iter().map(|&i| shifted[i].clone()).collect();
    let red = reduce_augmented(&flipped, &rhs);
    let mut vel: BTreeMap<Var, Expr> = at_rest.clone();
    for &(r, c) in &red.echelon.pivots {
        vel.insert(vs[order[c]], red.echelon.reduced.get(r, n).clone());
    }
    let pivots = red
        .echelon
        .pivot_values
        .iter()
        .filter(|p| !p.is_constant())
        .cloned()
        .collect();

    let pv = (0..n).fold(Expr::zero(), |acc, i| &acc + &(Expr::var(ps[i]) * &vel[&vs[i]]));
    let h = &pv - &l.substitute_unchecked(&vel)?;
    if h.contains_any(&vset) {
        return Err(Error::Internal("Hamiltonian still depends on velocities".into()));
    }
    Ok(FirstOrderSystem {
        phase: PhaseSpace::new(sys.coordinates.iter().copied().zip(ps.iter().copied()).collect()),
        hamiltonian: h,
        primaries,
        momentum_defs: ps.iter().copied().zip(momenta_def).collect(),
        pivots,
    })
}

/// Scales each term of `p` by `1/(k+1)`, `k` its degree in `vars`; this is
/// the radial homotopy integral `∫₀¹ p(t·v) dt`.
fn homotopy_scale(p: &Poly, vars: &BTreeSet<Var>) -> Poly {
    Poly::from_terms(p.terms().map(|(m, c)| {
        let k: u32 = m
            .pairs()
            .iter()
            .filter(|(v, _)| vars.contains(v))
            .map(|&(_, e)| e)
            .sum();
        (m.clone(), c / BigRational::from_integer(BigInt::from(k + 1)))
    }))
}

/// Counter-term `W = −Σ ∫ f_i dv^i` (integration constant zero) and the
/// acceleration-free `L + dW/dt`.
pub fn counter_term(sys: &LagrangianSystem, table: &SymbolTable) -> Result<CounterTerm> {
    if sys.order != 2 {
        return Err(Error::Precondition("counter-term needs an order-2 system".into()));
    }
    let vs = sys.velocities(table);
    let vset: BTreeSet<Var> = vs.iter().copied().collect();
    let (f, _) = sys.decompose(table);
    for fi in &f {
        if fi.denom().vars().iter().any(|v| vset.contains(v)) {
            return Err(Error::Unsupported(
                "acceleration coefficient is not polynomial in the velocities".into(),
            ));
        }
    }
    for i in 0..vs.len() {
        for j in 0..i {
            if f[i].diff(vs[j]) != f[j].diff(vs[i]) {
                return Err(Error::Unsupported(
                    "acceleration coefficients are not a closed form in the velocities".into(),
                ));
            }
        }
    }
    let big_f = f.iter().zip(&vs).fold(Expr::zero(), |acc, (fi, &v)| {
        let scaled = Expr::ratio(homotopy_scale(fi.numer(), &vset), fi.denom().clone()).unwrap();
        &acc + &(scaled * Expr::var(v))
    });
    let w = -big_f;
    let reduced = &sys.lagrangian + &total_derivative(&w, &sys.coordinates, table);
    let acc: BTreeSet<Var> = sys.accelerations(table).into_iter().collect();
    if reduced.contains_any(&acc) {
        return Err(Error::Internal("counter-term left accelerations behind".into()));
    }
    Ok(CounterTerm {
        w,
        reduced: LagrangianSystem {
            coordinates: sys.coordinates.clone(),
            momentum_names: sys.momentum_names.clone(),
            order: 1,
            lagrangian: reduced,
        },
    })
}

fn add_named_position(table: &mut SymbolTable, name: String) -> Result<Var> {
    if table.contains(&name) && table.kind(table.get(&name).unwrap()) != SymbolKind::Position {
        return Err(Error::Input(format!("`{name}` is already used")));
    }
    Ok(table.add_position(&name)?)
}

/// Ostrogradsky reduction with `Q_(1) = q`, `Q_(2) = q̇`. The result is the
/// first-order Hamiltonian system directly: `H = Σ P1·Q2 − g` and primaries
/// `P2_i − f_i`. Order-1 input goes straight through the Legendre transform.
pub fn ostrogradsky_reduce(
    sys: &LagrangianSystem,
    table: &mut SymbolTable,
) -> Result<FirstOrderSystem> {
    if sys.order == 1 {
        return legendre(sys, table);
    }
    let (f, g) = sys.decompose(table);
    let mut q1 = Vec::new();
    let mut q2 = Vec::new();
    let mut p1 = Vec::new();
    let mut p2 = Vec::new();
    for &q in &sys.coordinates {
        let base = table.name(q).to_string();
        q1.push(add_named_position(table, format!("Q1_{base}"))?);
        q2.push(add_named_position(table, format!("Q2_{base}"))?);
    }
    for &q in &sys.coordinates {
        let base = table.name(q).to_string();
        p1.push(table.add(&format!("P1_{base}"), SymbolKind::Momentum)?);
        p2.push(table.add(&format!("P2_{base}"), SymbolKind::Momentum)?);
    }
    let mut rules = BTreeMap::new();
    for (i, &q) in sys.coordinates.iter().enumerate() {
        rules.insert(q, Expr::var(q1[i]));
        rules.insert(table.velocity(q).unwrap(), Expr::var(q2[i]));
    }
    let f_new: Vec<Expr> = f
        .iter()
        .map(|e| e.substitute_unchecked(&rules))
        .collect::<std::result::Result<_, _>>()?;
    let g_new = g.substitute_unchecked(&rules)?;
    let n = sys.coordinates.len();
    let kinetic = (0..n).fold(Expr::zero(), |acc, i| &acc + &(Expr::var(p1[i]) * Expr::var(q2[i])));
    let h = kinetic - g_new;
    let primaries = (0..n).map(|i| Expr::var(p2[i]) - &f_new[i]).collect();

    let vs = sys.velocities(table);
    let mut defs = Vec::new();
    for i in 0..n {
        let dl_dv = sys.lagrangian.diff(vs[i]);
        let p1_def = dl_dv - total_derivative(&f[i], &sys.coordinates, table);
        defs.push((p1[i], p1_def));
    }
    for i in 0..n {
        defs.push((p2[i], f[i].clone()));
    }
    let mut pairs: Vec<(Var, Var)> = (0..n).map(|i| (q1[i], p1[i])).collect();
    pairs.extend((0..n).map(|i| (q2[i], p2[i])));
    Ok(FirstOrderSystem {
        phase: PhaseSpace::new(pairs),
        hamiltonian: h,
        primaries,
        momentum_defs: defs,
        pivots: Vec::new(),
    })
}

/// Pons reduction: `L̃ = L[q̈ → ẋ] + Σ λ (x − q̇)` with `x`, `λ` promoted to
/// coordinates whose momenta are `y` and `π`.
pub fn pons_reduce(sys: &LagrangianSystem, table: &mut SymbolTable) -> Result<LagrangianSystem> {
    if sys.order != 2 {
        return Err(Error::Precondition("Pons reduction needs an order-2 system".into()));
    }
    let mut xs = Vec::new();
    let mut lams = Vec::new();
    for &q in &sys.coordinates {
        let base = table.name(q).to_string();
        xs.push(add_named_position(table, format!("x_{base}"))?);
        lams.push(add_named_position(table, format!("lam_{base}"))?);
    }
    let mut rules = BTreeMap::new();
    for (i, &q) in sys.coordinates.iter().enumerate() {
        rules.insert(table.acceleration(q).unwrap(), Expr::var(table.velocity(xs[i]).unwrap()));
    }
    let mut l = sys.lagrangian.substitute_unchecked(&rules)?;
    for (i, &q) in sys.coordinates.iter().enumerate() {
        let v = Expr::var(table.velocity(q).unwrap());
        l = &l + &(Expr::var(lams[i]) * (Expr::var(xs[i]) - v));
    }
    let mut coords = sys.coordinates.clone();
    coords.extend(&xs);
    coords.extend(&lams);
    let mut names = sys.momentum_names.clone();
    for &q in &sys.coordinates {
        names.push(format!("y_{}", table.name(q)));
    }
    for &q in &sys.coordinates {
        names.push(format!("pi_{}", table.name(q)));
    }
    LagrangianSystem::with_momenta(coords, names, 1, l, table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::parse_expr;

    fn system(coords: &[&str], order: u8, l: &str) -> (SymbolTable, LagrangianSystem) {
        let mut t = SymbolTable::new();
        let qs: Vec<Var> = coords.iter().map(|c| t.add_position(c).unwrap()).collect();
        let e = parse_expr(l, &t).unwrap();
        let s = LagrangianSystem::new(qs, order, e, &t).unwrap();
        (t, s)
    }

    #[test]
    fn momentum_names() {
        assert_eq!(momentum_name("q3"), "p3");
        assert_eq!(momentum_name("q"), "p");
        assert_eq!(momentum_name("x"), "p_x");
    }

    #[test]
    fn nondegenerate_legendre() {
        let (mut t, s) = system(&["q1", "q2"], 1, "d(q1)^2/2 + d(q2)^2/2");
        let fo = legendre(&s, &mut t).unwrap();
        assert!(fo.primaries.is_empty());
        assert_eq!(fo.hamiltonian, parse_expr("p1^2/2 + p2^2/2", &t).unwrap());
    }

    #[test]
    fn super_quadratic_rejected() {
        let (mut t, s) = system(&["q"], 1, "d(q)^4");
        assert!(matches!(legendre(&s, &mut t), Err(Error::Unsupported(_))));
    }

    #[test]
    fn acceleration_free_counter_term_is_trivial() {
        let (t, s) = system(&["q"], 2, "d(q)^2/2 - q^2/2");
        let ct = counter_term(&s, &t).unwrap();
        assert!(ct.w.is_zero());
        assert_eq!(ct.reduced.lagrangian, s.lagrangian);
    }

    #[test]
    fn non_affine_acceleration_rejected() {
        let mut t = SymbolTable::new();
        let q = t.add_position("q").unwrap();
        let e = parse_expr("dd(q)^2", &t).unwrap();
        assert!(LagrangianSystem::new(vec![q], 2, e, &t).is_err());
    }

    #[test]
    fn degenerate_quadratic_legendre() {
        let (mut t, s) = system(
            &["q1", "q2", "q3", "q4"],
            1,
            "(1/2)*(q1+d(q2)+d(q3))^2 + (1/2)*(d(q4)-d(q2))^2 + (1/2)*(q1+2*q2)*(q1+2*q4)",
        );
        let fo = legendre(&s, &mut t).unwrap();
        let h = parse_expr("p3^2/2 + p4^2/2 - q1*p3 - (q1+2*q2)*(q1+2*q4)/2", &t).unwrap();
        assert_eq!(fo.hamiltonian, h);
        let prim: Vec<String> = fo.primaries.iter().map(|e| e.to_string_with(&t)).collect();
        assert_eq!(prim, ["p1", "p2 - p3 + p4"]);
    }

    #[test]
    fn counter_term_removes_acceleration() {
        let (t, s) = system(&["q"], 2, "-(1/2)*q*dd(q) - (1/2)*q^2");
        let ct = counter_term(&s, &t).unwrap();
        assert_eq!(ct.w, parse_expr("q*d(q)/2", &t).unwrap());
        assert_eq!(ct.reduced.lagrangian, parse_expr("d(q)^2/2 - q^2/2", &t).unwrap());
    }

    #[test]
    fn ostrogradsky_layout() {
        let (mut t, s) = system(&["q"], 2, "-(1/2)*q*dd(q) - (1/2)*q^2");
        let fo = ostrogradsky_reduce(&s, &mut t).unwrap();
        let names: Vec<&str> = fo.phase.z().iter().map(|&v| t.name(v)).collect();
        assert_eq!(names, ["Q1_q", "Q2_q", "P1_q", "P2_q"]);
        assert_eq!(fo.primaries, vec![parse_expr("P2_q + Q1_q/2", &t).unwrap()]);
        assert_eq!(fo.hamiltonian, parse_expr("P1_q*Q2_q + Q1_q^2/2", &t).unwrap());
    }

    #[test]
    fn pons_coordinates() {
        let (mut t, s) = system(&["q"], 2, "-(1/2)*q*dd(q) - (1/2)*q^2");
        let l = pons_reduce(&s, &mut t).unwrap();
        assert_eq!(l.momentum_names, ["p", "y_q", "pi_q"]);
        let fo = legendre(&l, &mut t).unwrap();
        assert_eq!(fo.primaries.len(), 3);
    }
}
