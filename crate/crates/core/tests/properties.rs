use std::collections::BTreeMap;

use proptest::prelude::*;
use wellposed_core::chart::{build_chart, FloatPoly};
use wellposed_core::embedding::ChartPoly;
use wellposed_core::dirac::{analyze, poisson, weak_reduce};
use wellposed_core::linalg::{null_space, rank, rank_bareiss, rank_field, ExprMatrix};
use wellposed_core::mechanics::{kinetic_matrix, legendre, LagrangianSystem, PhaseSpace, ReductionRegistry};
use wellposed_core::numerics::{compile_field, integrate, solve_iota};
use wellposed_core::symkernel::{parse_expr, Expr, SymbolKind, SymbolTable, Var};

/// `(coefficient, exponents)` terms of total degree at most `deg`.
fn terms(nvars: usize, deg: u32, max_terms: usize) -> impl Strategy<Value = Vec<(i64, Vec<u32>)>> {
    prop::collection::vec(
        (-4i64..=4, prop::collection::vec(0u32..=deg, nvars)).prop_filter("degree", move |(_, e)| e.iter().sum::<u32>() <= deg),
        0..=max_terms,
    )
}

fn build(ts: &[(i64, Vec<u32>)], vars: &[Var]) -> Expr {
    ts.iter().fold(Expr::zero(), |acc, (c, es)| {
        let m = vars.iter().zip(es).fold(Expr::int(*c), |m, (&v, &e)| m * Expr::var(v).pow(e));
        acc + m
    })
}

fn phase2() -> PhaseSpace {
    let mut table = SymbolTable::new();
    let mut pairs = Vec::new();
    for i in 1..=2 {
        let q = table.add_position(&format!("q{i}")).unwrap();
        let p = table.add(&format!("p{i}"), SymbolKind::Momentum).unwrap();
        pairs.push((q, p));
    }
    PhaseSpace::new(pairs)
}

fn poly3() -> impl Strategy<Value = Vec<(i64, Vec<u32>)>> {
    terms(4, 3, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bracket_antisymmetry_leibniz_jacobi(a in poly3(), b in poly3(), c in poly3()) {
        let phase = phase2();
        let z = phase.z();
        let (f, g, h) = (build(&a, &z), build(&b, &z), build(&c, &z));
        let br = |x: &Expr, y: &Expr| poisson(x, y, &phase);
        prop_assert_eq!(br(&f, &g), -br(&g, &f));
        prop_assert_eq!(br(&(&f * &g), &h), &(&f * &br(&g, &h)) + &(&br(&f, &h) * &g));
        let jacobi = &(&br(&f, &br(&g, &h)) + &br(&g, &br(&h, &f))) + &br(&h, &br(&f, &g));
        prop_assert!(jacobi.is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ring_axioms_and_leibniz_rule(a in terms(3, 2, 4), b in terms(3, 2, 4), c in terms(3, 2, 4)) {
        let mut t = SymbolTable::new();
        let vs: Vec<Var> = ["x", "y", "s"].iter().map(|n| t.add(n, SymbolKind::Parameter).unwrap()).collect();
        let (x, y, z) = (build(&a, &vs), build(&b, &vs), build(&c, &vs));
        prop_assert_eq!(&x + &(&y + &z), &(&x + &y) + &z);
        prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
        let s = vs[2];
        prop_assert_eq!((&x * &y).diff(s), &(&x.diff(s) * &y) + &(&x * &y.diff(s)));
        prop_assert_eq!((&x + &y).diff(s), &x.diff(s) + &y.diff(s));
    }

    #[test]
    fn print_then_parse_is_identity(a in terms(3, 3, 5), b in terms(3, 2, 3)) {
        let mut t = SymbolTable::new();
        let vs: Vec<Var> = ["u", "v", "w"].iter().map(|n| t.add(n, SymbolKind::Parameter).unwrap()).collect();
        let num = build(&a, &vs);
        let den = build(&b, &vs);
        let e = if den.is_zero() { num } else { num.checked_div(&den).unwrap() };
        let text = e.to_string_with(&t);
        prop_assert_eq!(parse_expr(&text, &t).unwrap(), e, "{}", text);
    }

    #[test]
    fn weak_reduction_kills_multiples_of_constraints(a in terms(4, 2, 4), b in terms(4, 2, 4)) {
        let mut t = SymbolTable::new();
        let mut pairs = Vec::new();
        for i in 1..=3 {
            let q = t.add_position(&format!("q{i}")).unwrap();
            let p = t.add(&format!("p{i}"), SymbolKind::Momentum).unwrap();
            pairs.push((q, p));
        }
        let phase = PhaseSpace::new(pairs);
        let pick: Vec<Var> = vec![phase.pairs()[0].0, phase.pairs()[1].1, phase.pairs()[2].0, phase.pairs()[0].1];
        let (x, y) = (build(&a, &pick), build(&b, &pick));
        let q3 = parse_expr("q3", &t).unwrap();
        let p2 = parse_expr("p2", &t).unwrap();
        let e = &(&q3 * &x) + &(&p2 * &y);
        prop_assert!(weak_reduce(&e, &[q3, p2], &phase).unwrap().is_zero());
    }

    #[test]
    fn rank_nullity(rows in 1usize..=8, cols in 1usize..=8, seed in prop::collection::vec(-3i64..=3, 64), zero_rows in 0usize..3) {
        let m = ExprMatrix::from_fn(rows, cols, |i, j| {
            // Repeat some rows to force rank deficiency.
            let i = if i < zero_rows { rows - 1 - i } else { i };
            Expr::int(seed[i * 8 + j])
        });
        let r = rank(&m);
        let null = null_space(&m);
        prop_assert_eq!(r + null.len(), cols);
        prop_assert_eq!(rank_bareiss(&m), rank_field(&m));
        for v in &null {
            prop_assert!(m.mul_vec(v).iter().all(Expr::is_zero));
        }
    }
}

/// Singular quadratic Lagrangian in two coordinates with a rank-one
/// kinetic term, so that primary constraints appear.
fn quadratic_lagrangian() -> impl Strategy<Value = String> {
    (1i64..=3, -2i64..=2, -2i64..=2, -2i64..=2, prop::collection::vec(-2i64..=2, 3), 0i64..=1).prop_map(
        |(a, b, m1, m2, v, regular)| {
            let kin = if regular == 1 {
                format!("(1/2)*({a}*d(x) + {b}*d(y))^2 + (1/2)*d(y)^2")
            } else {
                format!("(1/2)*({a}*d(x) + {b}*d(y))^2")
            };
            format!("{kin} + {m1}*x*d(y) + {m2}*y*d(x) - ({})*x^2 - ({})*x*y - ({})*y^2", v[0], v[1], v[2])
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(240))]

    #[test]
    fn charts_are_symplectic_and_transform_preserves_brackets(l in quadratic_lagrangian(), a in terms(4, 2, 3), b in terms(4, 2, 3)) {
        let mut t = SymbolTable::new();
        let qs = vec![t.add_position("x").unwrap(), t.add_position("y").unwrap()];
        let sys = LagrangianSystem::new(qs, 1, parse_expr(&l, &t).unwrap(), &t).unwrap();
        let k = kinetic_matrix(&sys, &t).unwrap();
        prop_assert!(k.is_symmetric());
        let red = ReductionRegistry::with_builtins().reduce(None, &sys, &mut t).unwrap();
        let Ok(result) = analyze(&red.system, &mut t) else {
            // Inconsistent or nonlinear theories emit no chart.
            return Ok(());
        };
        let chart = build_chart(&result, &mut t).unwrap();
        prop_assert!(chart.verify().symplectic, "{}", l);

        let z = result.phase.z();
        let (f, g) = (build(&a, &z), build(&b, &z));
        let n = chart.n();
        let chart_phase = PhaseSpace::new((0..n).map(|i| (chart.symbols[i], chart.symbols[i + n])).collect());
        let lhs = chart.transform(&poisson(&f, &g, &result.phase)).unwrap();
        let rhs = poisson(&chart.transform(&f).unwrap(), &chart.transform(&g).unwrap(), &chart_phase);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn primary_constraints_vanish_on_the_momentum_definitions(l in quadratic_lagrangian()) {
        let mut t = SymbolTable::new();
        let qs = vec![t.add_position("x").unwrap(), t.add_position("y").unwrap()];
        let sys = LagrangianSystem::new(qs.clone(), 1, parse_expr(&l, &t).unwrap(), &t).unwrap();
        let fo = legendre(&sys, &mut t).unwrap();
        let defs: BTreeMap<Var, Expr> = fo
            .phase
            .pairs()
            .iter()
            .map(|&(q, p)| (p, sys.lagrangian.diff(t.velocity(q).unwrap())))
            .collect();
        for phi in &fo.primaries {
            prop_assert!(phi.substitute_unchecked(&defs).unwrap().is_zero());
        }
    }
}

fn oscillator() -> (SymbolTable, wellposed_core::numerics::ReducedField) {
    let mut t = SymbolTable::new();
    let q = t.add_position("Q1").unwrap();
    let p = t.add("P1", SymbolKind::Momentum).unwrap();
    let h = FloatPoly::var(q).pow(2).add(&FloatPoly::var(p).pow(2)).scale(0.5);
    let field = compile_field(&h, &[q], &[p], None, &t).unwrap();
    (t, field)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(3))]

    #[test]
    fn oscillator_energy_drift_over_a_hundred_periods(q0 in -2.0f64..2.0, p0 in 0.1f64..2.0) {
        let (_, field) = oscillator();
        let t2 = 100.0 * 2.0 * std::f64::consts::PI;
        let traj = integrate(&field, &[q0, p0], 0.0, t2, 1e-3).unwrap();
        let e0 = field.energy(&[q0, p0], 0.0);
        prop_assert!(traj.max_energy_drift() / e0 < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn iota_round_trip(qa in -2.0f64..2.0, qb in -2.0f64..2.0, t2 in 0.3f64..2.8) {
        let (_, field) = oscillator();
        let sol = solve_iota(&field, 0.0, t2, &[qa], &[qb], 1e-3).unwrap();
        let traj = integrate(&field, &sol.initial_state, 0.0, t2, 1e-3).unwrap();
        prop_assert!((traj.states[0][0] - qa).abs() < 1e-9);
        prop_assert!((traj.last()[0] - qb).abs() < 1e-9);
    }

    #[test]
    fn field_matches_central_differences(ts in terms(2, 3, 5), q in -1.5f64..1.5, p in -1.5f64..1.5) {
        let mut t = SymbolTable::new();
        let qv = t.add_position("Q1").unwrap();
        let pv = t.add("P1", SymbolKind::Momentum).unwrap();
        let h = <FloatPoly as ChartPoly>::lift(&build(&ts, &[qv, pv])).unwrap();
        let field = compile_field(&h, &[qv], &[pv], None, &t).unwrap();
        let d = 1e-6;
        let e = |x: f64, y: f64| field.energy(&[x, y], 0.0);
        let dh_dq = (e(q + d, p) - e(q - d, p)) / (2.0 * d);
        let dh_dp = (e(q, p + d) - e(q, p - d)) / (2.0 * d);
        let f = field.eval(&[q, p], 0.0);
        for (got, want) in [(f[0], dh_dp), (f[1], -dh_dq)] {
            prop_assert!((got - want).abs() <= 1e-6 * want.abs().max(1.0), "{} vs {}", got, want);
        }
    }
}
