#![allow(dead_code)]

use std::collections::BTreeMap;

use wellposed_core::dirac::{analyze, DiracResult};
use wellposed_core::mechanics::{LagrangianSystem, PhaseSpace, Reduced, ReductionRegistry};
use wellposed_core::symkernel::{parse_expr, Expr, SymbolTable, Var};

pub const CAWLEY: &str = "d(q1)*d(q3) + (1/2)*q2*q3^2";
pub const L2: &str = "q1*d(q2) - q2*d(q1) - q1^2 - q2^2";
pub const L3: &str = "(1/2)*(q1 + d(q2) + d(q3))^2 + (1/2)*(d(q4) - d(q2))^2 + (1/2)*(q1 + 2*q2)*(q1 + 2*q4)";
pub const L4: &str = "-(1/2)*q*dd(q) - (1/2)*q^2";

pub struct Fixture {
    pub table: SymbolTable,
    pub reduced: Reduced,
    pub result: DiracResult,
}

pub fn run(coords: &[&str], order: u8, l: &str, path: Option<&str>) -> Fixture {
    let mut table = SymbolTable::new();
    let qs = coords.iter().map(|c| table.add_position(c).unwrap()).collect();
    let e = parse_expr(l, &table).unwrap();
    let sys = LagrangianSystem::new(qs, order, e, &table).unwrap();
    let reduced = ReductionRegistry::with_builtins().reduce(path, &sys, &mut table).unwrap();
    let result = analyze(&reduced.system, &mut table).unwrap();
    Fixture { table, reduced, result }
}

pub fn cawley() -> Fixture {
    run(&["q1", "q2", "q3"], 1, CAWLEY, None)
}

pub fn l2() -> Fixture {
    run(&["q1", "q2"], 1, L2, None)
}

pub fn l3() -> Fixture {
    run(&["q1", "q2", "q3", "q4"], 1, L3, None)
}

pub fn l4(path: &str) -> Fixture {
    run(&["q"], 2, L4, Some(path))
}

pub fn expr(f: &Fixture, s: &str) -> Expr {
    parse_expr(s, &f.table).unwrap()
}

pub fn var(f: &Fixture, s: &str) -> Var {
    f.table.get(s).unwrap()
}

/// Poisson bracket by central differences at a point; independent of the
/// symbolic derivative code.
pub fn numeric_bracket(f: &Expr, g: &Expr, phase: &PhaseSpace, at: &BTreeMap<Var, f64>) -> f64 {
    let h = 1e-4;
    let partial = |e: &Expr, v: Var| {
        let shifted = |d: f64| {
            e.eval_f64(&|x| at.get(&x).copied().unwrap_or(0.0) + if x == v { d } else { 0.0 })
        };
        (shifted(h) - shifted(-h)) / (2.0 * h)
    };
    phase
        .pairs()
        .iter()
        .map(|&(q, p)| partial(f, q) * partial(g, p) - partial(f, p) * partial(g, q))
        .sum()
}

/// Whether `e` lies in the span of `basis` modulo a constant, by exact
/// linear algebra on coefficient vectors of linear forms.
pub fn in_linear_span(e: &Expr, basis: &[Expr], phase: &PhaseSpace) -> bool {
    use wellposed_core::chart::affine_form;
    use wellposed_core::linalg::{rank, ExprMatrix};
    let row = |x: &Expr| -> Vec<Expr> {
        affine_form(x, phase)
            .expect("linear form")
            .coeffs
            .into_iter()
            .map(Expr::constant)
            .collect()
    };
    let base: Vec<Vec<Expr>> = basis.iter().map(row).collect();
    let mut with = base.clone();
    with.push(row(e));
    let r0 = if base.is_empty() { 0 } else { rank(&ExprMatrix::from_rows(base)) };
    r0 == rank(&ExprMatrix::from_rows(with))
}
