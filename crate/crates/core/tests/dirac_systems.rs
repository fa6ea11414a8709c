mod common;

use std::collections::BTreeMap;

use common::*;
use wellposed_core::chart::frobenius_check;
use wellposed_core::dirac::{poisson, ConstraintClass};
use wellposed_core::symkernel::Expr;

fn strings(f: &Fixture) -> Vec<String> {
    f.result.constraints.iter().map(|c| c.expr.to_string_with(&f.table)).collect()
}

#[test]
fn cawley_chain_is_first_class_with_no_dynamics() {
    let f = cawley();
    assert_eq!(strings(&f), ["p2", "q3", "p1"]);
    let gens: Vec<usize> = f.result.constraints.iter().map(|c| c.generation).collect();
    assert_eq!(gens, [0, 1, 2]);
    assert!(f.result.constraints.iter().all(|c| c.class == Some(ConstraintClass::First)));
    let q3 = &f.result.constraints[1];
    assert!(q3.repeated_factor);
    assert_eq!(q3.original.as_ref().unwrap().to_string_with(&f.table), "q3^2/2");
    assert_eq!((f.result.first_class, f.result.second_class, f.result.dof()), (3, 0, 0));
    assert!(frobenius_check(&f.result).unwrap().pass);
}

#[test]
fn cawley_total_hamiltonian_keeps_the_multiplier_free() {
    let f = cawley();
    let names: Vec<&str> = f.result.free_multipliers.iter().map(|&z| f.table.name(z)).collect();
    assert_eq!(names, ["zeta1"]);
    let expected = expr(&f, "p1*p3 - q2*q3^2/2 + zeta1*p2");
    assert_eq!(f.result.total_hamiltonian, expected);
}

#[test]
fn l2_primaries_are_second_class_with_bracket_two() {
    let f = l2();
    assert_eq!(strings(&f), ["q2 + p1", "-q1 + p2"]);
    assert!(f.result.constraints.iter().all(|c| c.class == Some(ConstraintClass::Second)));
    let (a, b) = (&f.result.constraints[0].expr, &f.result.constraints[1].expr);
    assert_eq!(poisson(a, b, &f.result.phase), Expr::int(2));
    assert_eq!(f.result.brackets.get(0, 1), &Expr::int(2));
    let at: BTreeMap<_, _> = f.result.phase.z().into_iter().zip([0.3, -1.1, 0.7, 2.0]).collect();
    assert!((numeric_bracket(a, b, &f.result.phase, &at) - 2.0).abs() < 1e-8);
}

#[test]
fn l2_multipliers_and_dof() {
    let f = l2();
    let z = |n: &str| f.result.multipliers[&var(&f, n)].clone();
    assert_eq!(z("zeta1"), expr(&f, "-q2"));
    assert_eq!(z("zeta2"), expr(&f, "q1"));
    assert!(f.result.free_multipliers.is_empty());
    assert_eq!(f.result.dof(), 1);
}

#[test]
fn l3_classes_multipliers_and_dof() {
    let f = l3();
    let r = &f.result;
    assert_eq!((r.first_class, r.second_class, r.dof()), (2, 2, 1));
    assert_eq!(r.multipliers[&var(&f, "zeta2")], expr(&f, "-p4"));
    let free: Vec<&str> = r.free_multipliers.iter().map(|&z| f.table.name(z)).collect();
    assert_eq!(free, ["zeta1"]);
}

#[test]
fn l3_constraint_spans_match_the_known_chains() {
    let f = l3();
    let r = &f.result;
    let first: Vec<Expr> = r.of_class(ConstraintClass::First).map(|c| c.expr.clone()).collect();
    let second: Vec<Expr> = r.of_class(ConstraintClass::Second).map(|c| c.expr.clone()).collect();
    for s in ["p1 - (1/2)*(p2 - p3 + p4)", "p3"] {
        assert!(in_linear_span(&expr(&f, s), &first, &r.phase), "{s}");
    }
    let mut all = first.clone();
    all.extend(second);
    for s in ["(1/3)*(p1 + p2 - p3 + p4)", "(1/3)*p3 + q1 + q2 + q4"] {
        let e = expr(&f, s);
        assert!(in_linear_span(&e, &all, &r.phase), "{s}");
        assert!(!in_linear_span(&e, &first, &r.phase), "{s}");
    }
}

#[test]
fn l3_primaries_span_the_kernel_of_the_kinetic_matrix() {
    let f = l3();
    let prim: Vec<Expr> = f.result.primaries().map(|c| c.expr.clone()).collect();
    for s in ["p1", "p2 - p3 + p4"] {
        assert!(in_linear_span(&expr(&f, s), &prim, &f.result.phase));
    }
}

#[test]
fn every_constraint_is_preserved_by_the_total_hamiltonian() {
    for f in [cawley(), l2(), l3(), l4("ssok"), l4("pons")] {
        let r = &f.result;
        for c in &r.constraints {
            let dot = poisson(&c.expr, &r.total_hamiltonian, &r.phase);
            assert!(r.reducer.is_weakly_zero(&dot).unwrap(), "{}", c.expr.to_string_with(&f.table));
        }
    }
}

#[test]
fn ssok_has_two_second_class_with_bracket_minus_one() {
    let f = l4("ssok");
    let r = &f.result;
    assert_eq!((r.first_class, r.second_class, r.dof()), (0, 2, 1));
    let (a, b) = (&r.constraints[0].expr, &r.constraints[1].expr);
    assert_eq!(poisson(a, b, &r.phase), Expr::int(-1));
}

#[test]
fn pons_multipliers_agree_weakly_with_the_known_values() {
    let f = l4("pons");
    let r = &f.result;
    assert_eq!((r.first_class, r.second_class, r.dof()), (0, 4, 1));
    for (z, known) in [("zeta1", "x_q"), ("zeta2", "-q"), ("zeta3", "q/2")] {
        let diff = &r.multipliers[&var(&f, z)] - &expr(&f, known);
        assert!(r.reducer.is_weakly_zero(&diff).unwrap(), "{z}");
    }
}

#[test]
fn counter_term_path_is_unconstrained() {
    let f = l4("counter-term");
    assert!(f.result.constraints.is_empty());
    assert_eq!(f.result.dof(), 1);
    let ct = f.reduced.counter_term.as_ref().unwrap();
    assert_eq!(ct.w, expr(&f, "q*d(q)/2"));
    assert_eq!(ct.reduced.lagrangian, expr(&f, "d(q)^2/2 - q^2/2"));
}

#[test]
fn unconstrained_system_has_no_multipliers() {
    let f = run(&["x", "y"], 1, "(1/2)*d(x)^2 + (1/2)*d(y)^2 - x*y", None);
    assert!(f.result.constraints.is_empty());
    assert!(f.result.zetas.is_empty());
    assert_eq!(f.result.dof(), 2);
}

#[test]
fn inconsistent_theory_is_reported() {
    use wellposed_core::dirac::analyze;
    use wellposed_core::mechanics::{LagrangianSystem, ReductionRegistry};
    use wellposed_core::symkernel::{parse_expr, SymbolTable};
    let mut t = SymbolTable::new();
    let q = t.add_position("q").unwrap();
    let sys = LagrangianSystem::new(vec![q], 1, parse_expr("q", &t).unwrap(), &t).unwrap();
    let red = ReductionRegistry::with_builtins().reduce(None, &sys, &mut t).unwrap();
    let err = analyze(&red.system, &mut t).unwrap_err();
    assert_eq!(err.kind(), wellposed_core::error::ErrorKind::Inconsistent);
}
