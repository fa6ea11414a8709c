mod common;

use std::collections::BTreeMap;

use num::BigRational;

use common::*;
use wellposed_core::chart::{
    build_chart, CanonicalChart, ChartFile, Entry, FloatPoly, Role, RowRole,
};
use wellposed_core::dirac::ConstraintClass;
use wellposed_core::embedding::*;
use wellposed_core::symkernel::Expr;

fn fixtures() -> Vec<(&'static str, Fixture)> {
    vec![
        ("cawley", cawley()),
        ("l2", l2()),
        ("l3", l3()),
        ("ssok", l4("ssok")),
        ("pons", l4("pons")),
        ("counter-term", l4("counter-term")),
    ]
}

fn reference_l3_chart(f: &mut Fixture) -> CanonicalChart {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../cli/fixtures/l3_chart.json")).unwrap();
    let cf: ChartFile = serde_json::from_str(&text).unwrap();
    let mut c = cf.to_chart(&f.result.phase, &f.table).unwrap();
    c.register(&mut f.table).unwrap();
    c
}

/// Replaces chart symbols by their row expressions.
fn pull_back(chart: &CanonicalChart, e: &Expr) -> Expr {
    let rules: BTreeMap<_, _> = (0..chart.roles.len()).map(|i| (chart.symbols[i], chart.row_expr(i).unwrap())).collect();
    e.substitute_unchecked(&rules).unwrap()
}

#[test]
fn constructed_charts_are_canonical_and_invert_the_transform() {
    for (name, mut f) in fixtures() {
        let chart = build_chart(&f.result, &mut f.table).unwrap();
        let check = chart.verify();
        assert!(check.symplectic, "{name}: {:?}", check.violations);
        let h = chart.transform(&f.result.total_hamiltonian).unwrap();
        assert_eq!(pull_back(&chart, &h), f.result.total_hamiltonian, "{name}");
    }
}

#[test]
fn constructed_chart_rows_are_built_from_the_constraints() {
    for (name, mut f) in fixtures() {
        let chart = build_chart(&f.result, &mut f.table).unwrap();
        let first: Vec<Expr> = f.result.of_class(ConstraintClass::First).map(|c| c.expr.clone()).collect();
        let all = f.result.exprs();
        for i in chart.rows_with(Role::Psi) {
            assert!(in_linear_span(&chart.row_expr(i).unwrap(), &first, &f.result.phase), "{name}");
        }
        for i in chart.rows_with(Role::ThetaUp).chain(chart.rows_with(Role::ThetaDown)) {
            assert!(in_linear_span(&chart.row_expr(i).unwrap(), &all, &f.result.phase), "{name}");
        }
        assert_eq!(chart.rows_with(Role::Q).count(), f.result.dof(), "{name}");
    }
}

#[test]
fn l2_constructed_chart_hamiltonian() {
    let mut f = l2();
    let chart = build_chart(&f.result, &mut f.table).unwrap();
    let h = chart.transform(&f.result.total_hamiltonian).unwrap();
    assert_eq!(h, expr(&f, "-Theta1^2/4 + Q1^2 - Theta_1^2 + P1^2/4"));
}

#[test]
fn l2_sqrt2_chart_gives_the_symmetric_hamiltonian() {
    let f = l2();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let rows = vec![
        (RowRole { role: Role::ThetaUp, index: 1 }, Entry::Float { coeffs: vec![0.0, s, s, 0.0], offset: 0.0 }),
        (RowRole { role: Role::Q, index: 1 }, Entry::Float { coeffs: vec![s, 0.0, 0.0, s], offset: 0.0 }),
        (RowRole { role: Role::ThetaDown, index: 1 }, Entry::Float { coeffs: vec![-s, 0.0, 0.0, s], offset: 0.0 }),
        (RowRole { role: Role::P, index: 1 }, Entry::Float { coeffs: vec![0.0, -s, s, 0.0], offset: 0.0 }),
    ];
    let mut table = f.table.clone();
    let mut chart = CanonicalChart::from_rows(&f.result.phase, rows).unwrap();
    chart.register(&mut table).unwrap();
    assert!(chart.verify().symplectic);
    let h: FloatPoly = chart_hamiltonian(&f.result, &chart).unwrap();
    let v = |n: &str| FloatPoly::var(table.get(n).unwrap());
    let expected = v("P1").pow(2).add(&v("Q1").pow(2)).sub(&v("Theta1").pow(2)).sub(&v("Theta_1").pow(2)).scale(0.5);
    assert!(h.approx_eq(&expected, 1e-12), "{}", h.to_string_with(&table));
}

#[test]
fn l3_reference_chart_fixes_the_gauge_at_minus_p1() {
    let mut f = l3();
    let chart = reference_l3_chart(&mut f);
    assert!(chart.verify().symplectic);
    let reg = EmbeddingRegistry::with_builtins();
    let sigma3 = select_embedding(&f.result, true, &reg).unwrap();
    assert_eq!(sigma3.kind(), EmbeddingKind::Sigma3);
    let opts = PlanOptions { gauge_fixing: true, gauge: Gauge::Auto, ..Default::default() };
    let plan = plan_embedding(&f.result, &chart, sigma3, &opts, &f.table).unwrap();
    let z1 = var(&f, "zeta1");
    assert_eq!(plan.gauge_multiplier_solutions[&z1], expr(&f, "-P1"));
    let b = boundary_report(&f.result, &chart, &plan, &f.table).unwrap();
    assert_eq!(b.fix_both_ends, ["Q1"]);
    assert!(b.fix_initial_only.is_empty() && b.never_fix.is_empty());
    assert_eq!((b.occupied, b.total), (6, 8));
    assert!(b.ledger_closes());
}

#[test]
fn wrong_gauge_condition_is_inconsistent() {
    let mut f = l3();
    let chart = reference_l3_chart(&mut f);
    let reg = EmbeddingRegistry::with_builtins();
    let conds = [(var(&f, "zeta1"), expr(&f, "P1"))].into_iter().collect();
    let opts = PlanOptions { gauge_fixing: true, gauge: Gauge::Conditions(conds), ..Default::default() };
    let err = plan_embedding(&f.result, &chart, reg.get("sigma3").unwrap(), &opts, &f.table).unwrap_err();
    assert_eq!(err.kind(), wellposed_core::error::ErrorKind::Inconsistent);
}

fn l3_quasi_canonical_report(chart: &CanonicalChart, f: &Fixture) -> BoundaryReport {
    let reg = EmbeddingRegistry::with_builtins();
    let emb = select_embedding(&f.result, false, &reg).unwrap();
    assert_eq!(emb.kind(), EmbeddingKind::Sigma3Tilde);
    let plan = plan_embedding(&f.result, chart, emb, &PlanOptions::default(), &f.table).unwrap();
    boundary_report(&f.result, chart, &plan, &f.table).unwrap()
}

#[test]
fn l3_quasi_canonical_boundary_data() {
    let mut f = l3();
    let built = build_chart(&f.result, &mut f.table).unwrap();
    let mut g = l3();
    let reference = reference_l3_chart(&mut g);
    for (chart, f) in [(&built, &f), (&reference, &g)] {
        let b = l3_quasi_canonical_report(chart, f);
        assert_eq!(b.fix_both_ends, ["Q1"]);
        assert_eq!((b.fix_initial_only.len(), b.never_fix.len()), (1, 1));
        assert_eq!((b.occupied, b.total), (4, 8));
        assert!(b.ledger_closes());
        // The never-fixed Ξ is conjugate to the primary first-class constraint.
        let xi = chart.symbols.iter().position(|&v| f.table.name(v) == b.never_fix[0]).unwrap();
        let psi = chart.row_expr(xi + chart.n()).unwrap();
        let prim: Vec<Expr> = f.result.primaries().map(|c| c.expr.clone()).collect();
        assert!(in_linear_span(&psi, &prim, &f.result.phase));
    }
    let b = l3_quasi_canonical_report(&reference, &g);
    assert_eq!((b.fix_initial_only.as_slice(), b.never_fix.as_slice()), (&["Xi2".to_string()][..], &["Xi1".to_string()][..]));
}

#[test]
fn selection_table() {
    let reg = EmbeddingRegistry::with_builtins();
    let cases = [
        ((0, 0, false), EmbeddingKind::Identity),
        ((0, 0, true), EmbeddingKind::Identity),
        ((3, 0, true), EmbeddingKind::Sigma1),
        ((3, 0, false), EmbeddingKind::Sigma1Tilde),
        ((0, 2, false), EmbeddingKind::Sigma2),
        ((0, 2, true), EmbeddingKind::Sigma2),
        ((2, 2, true), EmbeddingKind::Sigma3),
        ((2, 2, false), EmbeddingKind::Sigma3Tilde),
    ];
    for ((fc, sc, g), kind) in cases {
        assert_eq!(reg.select(fc, sc, g).unwrap().kind(), kind, "{fc} {sc} {g}");
    }
}

#[test]
fn systems_select_the_expected_embedding() {
    let reg = EmbeddingRegistry::with_builtins();
    let expected = [
        ("cawley", EmbeddingKind::Sigma1Tilde),
        ("l2", EmbeddingKind::Sigma2),
        ("l3", EmbeddingKind::Sigma3Tilde),
        ("ssok", EmbeddingKind::Sigma2),
        ("pons", EmbeddingKind::Sigma2),
        ("counter-term", EmbeddingKind::Identity),
    ];
    for ((name, f), (n2, kind)) in fixtures().into_iter().zip(expected) {
        assert_eq!(name, n2);
        assert_eq!(select_embedding(&f.result, false, &reg).unwrap().kind(), kind, "{name}");
    }
}

#[test]
fn invalid_embeddings_are_rejected_with_the_diagnostic() {
    let reg = EmbeddingRegistry::with_builtins();
    for name in ["sigma3_1", "sigma3_2", "sigma3_tilde_1"] {
        let err = reg.get(name).err().unwrap().to_string();
        assert!(err.contains("the map ι does not exist"), "{err}");
    }
    assert!(reg.get("sigma3").is_ok());
}

#[test]
fn occupied_counts_follow_the_fixed_roles() {
    let reg = EmbeddingRegistry::with_builtins();
    for name in reg.names() {
        let e = reg.get(name).unwrap();
        for (r, s) in [(1, 0), (0, 1), (2, 3), (3, 1)] {
            let pairs = |role: Role| if e.fixes(role) { 1 } else { 0 };
            let expected = r * (pairs(Role::Xi) + pairs(Role::Psi)) + s * (pairs(Role::ThetaUp) + pairs(Role::ThetaDown));
            assert_eq!(e.occupied(r, s), expected, "{name}");
        }
    }
}

#[test]
fn every_system_ledger_closes() {
    let reg = EmbeddingRegistry::with_builtins();
    for (name, mut f) in fixtures() {
        let chart = build_chart(&f.result, &mut f.table).unwrap();
        let emb = select_embedding(&f.result, false, &reg).unwrap();
        let plan = plan_embedding(&f.result, &chart, emb, &PlanOptions::default(), &f.table).unwrap();
        let b = boundary_report(&f.result, &chart, &plan, &f.table).unwrap();
        assert!(b.ledger_closes(), "{name}: {b:?}");
        assert_eq!(b.total, 2 * f.result.phase.n(), "{name}");
        assert_eq!(b.fix_both_ends.len(), f.result.dof(), "{name}");
    }
}

#[test]
fn l2_pullback_keeps_only_the_physical_pair() {
    let mut f = l2();
    let chart = build_chart(&f.result, &mut f.table).unwrap();
    let reg = EmbeddingRegistry::with_builtins();
    let plan = plan_embedding(&f.result, &chart, reg.get("sigma2").unwrap(), &PlanOptions::default(), &f.table).unwrap();
    let pb = pullback_total_lagrangian::<Expr>(&f.result, &chart, &plan, &f.table).unwrap();
    assert_eq!(pb.lagrangian, expr(&f, "P1*d(Q1) - Q1^2 - P1^2/4"));
    assert!(pb.constant.is_zero());
    assert!(pb.total_derivative.is_zero());
}

#[test]
fn epsilon_offsets_move_into_the_constant_and_the_field() {
    let mut f = l4("ssok");
    let chart = build_chart(&f.result, &mut f.table).unwrap();
    let reg = EmbeddingRegistry::with_builtins();
    let mut opts = PlanOptions::default();
    opts.epsilon.insert("Theta_1".into(), BigRational::new(1.into(), 2.into()));
    let plan = plan_embedding(&f.result, &chart, reg.get("sigma2").unwrap(), &opts, &f.table).unwrap();
    let pb = pullback_total_lagrangian::<Expr>(&f.result, &chart, &plan, &f.table).unwrap();
    let h0: Expr = chart_hamiltonian(&f.result, &chart).unwrap();
    // Oracle: substitute the fixed values into the chart Hamiltonian by hand.
    let th = [("Theta1", Expr::zero()), ("Theta_1", Expr::rational(1, 2))];
    let rules = th.iter().map(|(n, e)| (var(&f, n), e.clone())).collect();
    let full = h0.substitute_unchecked(&rules).unwrap();
    assert_eq!(&pb.hamiltonian - &pb.constant, full);
    assert!(pb.hamiltonian.as_constant().is_none());
    assert!(pb.constant.is_constant());
}

#[test]
fn epsilon_for_a_free_coordinate_is_an_error() {
    let mut f = l2();
    let chart = build_chart(&f.result, &mut f.table).unwrap();
    let reg = EmbeddingRegistry::with_builtins();
    let mut opts = PlanOptions::default();
    opts.epsilon.insert("Q1".into(), BigRational::from_integer(1.into()));
    assert!(plan_embedding(&f.result, &chart, reg.get("sigma2").unwrap(), &opts, &f.table).is_err());
}

#[test]
fn effective_hamiltonian_drops_the_free_multiplier() {
    let mut f = l3();
    let chart = reference_l3_chart(&mut f);
    let h = effective_hamiltonian(&f.result, &chart).unwrap();
    assert!(!h.contains_var(var(&f, "zeta1")));
    for i in primary_psi_rows(&f.result, &chart).unwrap() {
        assert!(!h.contains_var(chart.symbols[i]));
    }
    let mut g = l2();
    let c2 = build_chart(&g.result, &mut g.table).unwrap();
    assert!(effective_hamiltonian(&g.result, &c2).is_err());
}
