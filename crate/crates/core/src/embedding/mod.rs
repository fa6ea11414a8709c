//! Embedding selection, pulled-back total Lagrangian, effective Hamiltonian
//! and the boundary conditions that make the action principle well-posed.

mod registry;

use std::collections::{BTreeMap, BTreeSet};

use num::{BigRational, Zero};
use serde::Serialize;

use crate::chart::{affine_form, CanonicalChart, Entries, FloatPoly, Role};
use crate::dirac::{ConstraintClass, DiracResult};
use crate::error::{Error, Result};
use crate::linalg::{rank, solve_linear, ExprMatrix, LinearSolution};
use crate::symkernel::{Expr, SymbolTable, Var};

pub use registry::{Embedding, EmbeddingKind, EmbeddingRegistry};

type Rat = BigRational;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    #[default]
    T1,
    T2,
}

impl Endpoint {
    pub fn label(self) -> &'static str {
        match self {
            Endpoint::T1 => "t1",
            Endpoint::T2 => "t2",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub enum Gauge {
    #[default]
    None,
    /// Solve the free multipliers from `dΞ/dt = 0` on the primary `Ξ`.
    Auto,
    /// User-supplied multiplier values in chart symbols.
    Conditions(BTreeMap<Var, Expr>),
}

#[derive(Clone, Debug, Default)]
pub struct PlanOptions {
    pub gauge_fixing: bool,
    pub gauge: Gauge,
    pub endpoint: Endpoint,
    /// Constant values by chart-coordinate name; unlisted ones are 0.
    pub epsilon: BTreeMap<String, Rat>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingPlan {
    pub kind: EmbeddingKind,
    pub name: &'static str,
    pub symbol: &'static str,
    pub quasi: bool,
    /// Fixed chart coordinates with their constants, in chart row order.
    pub fixed: Vec<(Var, Rat)>,
    pub gauge_fixed: bool,
    pub gauge_multiplier_solutions: BTreeMap<Var, Expr>,
    pub endpoint: Endpoint,
    pub occupied: usize,
}

impl EmbeddingPlan {
    pub fn fixed_map(&self) -> BTreeMap<Var, Expr> {
        self.fixed
            .iter()
            .map(|(v, c)| (*v, Expr::constant(c.clone())))
            .collect()
    }

    pub fn is_fixed(&self, v: Var) -> bool {
        self.fixed.iter().any(|(x, _)| *x == v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct IntegralConstants {
    pub total: usize,
    pub occupied: usize,
    pub free: usize,
}

pub fn select_embedding<'r>(
    result: &DiracResult,
    gauge_fixing: bool,
    registry: &'r EmbeddingRegistry,
) -> Result<&'r dyn Embedding> {
    registry.select(result.first_class, result.second_class, gauge_fixing)
}

pub fn integral_constant_budget(result: &DiracResult, plan: &EmbeddingPlan) -> IntegralConstants {
    let total = 2 * result.n();
    IntegralConstants {
        total,
        occupied: plan.occupied,
        free: total - plan.occupied,
    }
}

/// Indices of the `Ψ` rows lying in the span of the primary first-class
/// constraints.
pub fn primary_psi_rows(result: &DiracResult, chart: &CanonicalChart) -> Result<Vec<usize>> {
    let prim: Vec<Vec<Rat>> = result
        .constraints
        .iter()
        .filter(|c| c.is_primary() && c.class == Some(ConstraintClass::First))
        .map(|c| {
            affine_form(&c.expr, &result.phase).map(|f| f.coeffs).ok_or_else(|| {
                Error::Unsupported("primary first-class constraint is not linear".into())
            })
        })
        .collect::<Result<_>>()?;
    let psi: Vec<usize> = chart.rows_with(Role::Psi).collect();
    if prim.is_empty() {
        return Ok(Vec::new());
    }
    match &chart.entries {
        Entries::Exact { rows, .. } => {
            let to_m = |vs: &[Vec<Rat>]| {
                ExprMatrix::from_rows(
                    vs.iter()
                        .map(|v| v.iter().map(|c| Expr::constant(c.clone())).collect())
                        .collect(),
                )
            };
            let base = rank(&to_m(&prim));
            Ok(psi
                .into_iter()
                .filter(|&i| {
                    let mut m = prim.clone();
                    m.push(rows[i].clone());
                    rank(&to_m(&m)) == base
                })
                .collect())
        }
        Entries::Float { rows, .. } => {
            let primf: Vec<Vec<f64>> = prim
                .iter()
                .map(|v| v.iter().map(crate::symkernel::to_f64).collect())
                .collect();
            let base = float_rank(&primf);
            Ok(psi
                .into_iter()
                .filter(|&i| {
                    let mut m = primf.clone();
                    m.push(rows[i].clone());
                    float_rank(&m) == base
                })
                .collect())
        }
    }
}

fn float_rank(rows: &[Vec<f64>]) -> usize {
    let mut a: Vec<Vec<f64>> = rows.to_vec();
    let cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())) else {
            break;
        };
        if a[p][c].abs() < 1e-9 {
            continue;
        }
        a.swap(r, p);
        for i in (r + 1)..a.len() {
            let f = a[i][c] / a[r][c];
            for j in c..cols {
                a[i][j] -= f * a[r][j];
            }
        }
        r += 1;
    }
    r
}

/// Coefficient polynomials a chart can transform into.
pub trait ChartPoly: Clone + std::fmt::Debug {
    fn transform(chart: &CanonicalChart, e: &Expr) -> Result<Self>;
    fn lift(e: &Expr) -> Result<Self>;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn subst(&self, rules: &BTreeMap<Var, Expr>) -> Result<Self>;
    fn constant_part(&self) -> Self;
    fn render(&self, table: &SymbolTable) -> String;
}

impl ChartPoly for Expr {
    fn transform(chart: &CanonicalChart, e: &Expr) -> Result<Self> {
        chart.transform(e)
    }

    fn lift(e: &Expr) -> Result<Self> {
        Ok(e.clone())
    }

    fn plus(&self, o: &Self) -> Self {
        self + o
    }

    fn minus(&self, o: &Self) -> Self {
        self - o
    }

    fn subst(&self, rules: &BTreeMap<Var, Expr>) -> Result<Self> {
        Ok(self.substitute_unchecked(rules)?)
    }

    fn constant_part(&self) -> Self {
        let c = self.numer().terms().find(|(m, _)| m.is_one()).map(|(_, c)| c.clone());
        match (c, self.denom().as_constant()) {
            (Some(c), Some(d)) => Expr::constant(c / d),
            _ => Expr::zero(),
        }
    }

    fn render(&self, table: &SymbolTable) -> String {
        self.to_string_with(table)
    }
}

impl ChartPoly for FloatPoly {
    fn transform(chart: &CanonicalChart, e: &Expr) -> Result<Self> {
        chart.transform_float(e)
    }

    fn lift(e: &Expr) -> Result<Self> {
        FloatPoly::from_expr(e).ok_or_else(|| Error::Precondition("expression must be polynomial".into()))
    }

    fn plus(&self, o: &Self) -> Self {
        self.add(o)
    }

    fn minus(&self, o: &Self) -> Self {
        self.sub(o)
    }

    fn subst(&self, rules: &BTreeMap<Var, Expr>) -> Result<Self> {
        let r = rules
            .iter()
            .map(|(v, e)| Ok((*v, Self::lift(e)?)))
            .collect::<Result<_>>()?;
        Ok(self.substitute(&r).cleaned(1e-13))
    }

    fn constant_part(&self) -> Self {
        FloatPoly::constant(self.constant_term())
    }

    fn render(&self, table: &SymbolTable) -> String {
        self.to_string_with(table)
    }
}

/// The total Hamiltonian in chart symbols, free multipliers kept symbolic.
pub fn chart_hamiltonian<P: ChartPoly>(result: &DiracResult, chart: &CanonicalChart) -> Result<P> {
    P::transform(chart, &result.total_hamiltonian)
}

/// Fixes the chart coordinates the embedding pins, and for gauge-fixed
/// kinds solves or checks the multipliers so that every `Ξ` stays static.
pub fn plan_embedding(
    result: &DiracResult,
    chart: &CanonicalChart,
    embedding: &dyn Embedding,
    opts: &PlanOptions,
    table: &SymbolTable,
) -> Result<EmbeddingPlan> {
    let mut fixed = Vec::new();
    let mut used = BTreeSet::new();
    for (i, r) in chart.roles.iter().enumerate() {
        if embedding.fixes(r.role) {
            let v = chart.symbols[i];
            let name = table.name(v);
            let eps = opts.epsilon.get(name).cloned().unwrap_or_else(Rat::zero);
            used.insert(name.to_string());
            fixed.push((v, eps));
        }
    }
    if let Some(k) = opts.epsilon.keys().find(|k| !used.contains(*k)) {
        return Err(Error::Input(format!(
            "epsilon given for `{k}`, which the {} embedding does not fix",
            embedding.name()
        )));
    }
    let mut plan = EmbeddingPlan {
        kind: embedding.kind(),
        name: embedding.name(),
        symbol: embedding.symbol(),
        quasi: embedding.quasi(),
        fixed,
        gauge_fixed: false,
        gauge_multiplier_solutions: BTreeMap::new(),
        endpoint: opts.endpoint,
        occupied: embedding.occupied(result.first_class, result.second_class / 2),
    };
    if embedding.fixes(Role::Xi) && result.first_class > 0 {
        let gauge = match &opts.gauge {
            Gauge::None => Gauge::Auto,
            g => g.clone(),
        };
        plan.gauge_multiplier_solutions = fix_gauge(result, chart, &plan, &gauge, table)?;
        plan.gauge_fixed = true;
    } else if opts.gauge != Gauge::None && opts.gauge_fixing {
        return Err(Error::Input(format!(
            "gauge conditions given, but the {} embedding has no gauge coordinates",
            embedding.name()
        )));
    }
    Ok(plan)
}

fn fix_gauge(
    result: &DiracResult,
    chart: &CanonicalChart,
    plan: &EmbeddingPlan,
    gauge: &Gauge,
    table: &SymbolTable,
) -> Result<BTreeMap<Var, Expr>> {
    if !chart.is_exact() {
        return Err(Error::Unsupported("gauge fixing needs an exact chart".into()));
    }
    let h: Expr = chart_hamiltonian(result, chart)?;
    let fixed = plan.fixed_map();
    let n = chart.n();
    let mut xi_dot = Vec::new();
    for i in chart.rows_with(Role::Xi) {
        let psi = chart.symbols[i + n];
        xi_dot.push((chart.symbols[i], i + n, h.diff(psi).substitute_unchecked(&fixed)?));
    }
    let free = &result.free_multipliers;
    let solutions = match gauge {
        Gauge::Conditions(c) => {
            if let Some(z) = c.keys().find(|z| !free.contains(z)) {
                return Err(Error::Input(format!(
                    "`{}` is not a free multiplier",
                    table.name(*z)
                )));
            }
            c.clone()
        }
        _ => {
            let primary = primary_psi_rows(result, chart)?;
            let eqs: Vec<&Expr> = xi_dot
                .iter()
                .filter(|(_, psi_row, _)| primary.contains(psi_row))
                .map(|(_, _, e)| e)
                .collect();
            let zero: BTreeMap<Var, Expr> = free.iter().map(|&z| (z, Expr::zero())).collect();
            let a = ExprMatrix::from_fn(eqs.len(), free.len(), |i, j| eqs[i].diff(free[j]));
            let b: Vec<Expr> = eqs
                .iter()
                .map(|e| e.substitute_unchecked(&zero).map(|x| -x))
                .collect::<std::result::Result<_, _>>()?;
            match solve_linear(&a, &b) {
                LinearSolution::Solved {
                    particular, free: undetermined, ..
                } => free
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| !undetermined.contains(j))
                    .map(|(j, &z)| (z, particular[j].clone()))
                    .collect(),
                LinearSolution::Inconsistent { residual, .. } => {
                    return Err(Error::Inconsistent(format!(
                        "no multipliers keep the gauge coordinates static ({} = 0)",
                        residual.to_string_with(table)
                    )))
                }
            }
        }
    };
    for (xi, _, e) in &xi_dot {
        let r = e.substitute_unchecked(&solutions)?;
        if !r.is_zero() {
            return Err(Error::Inconsistent(format!(
                "gauge conditions leave d({})/dt = {}",
                table.name(*xi),
                r.to_string_with(table)
            )));
        }
    }
    Ok(solutions)
}

/// `L_T = Σ P dQ + Σ Θ_ dΘ^ − H_T` pulled back by the embedding.
#[derive(Clone, Debug)]
pub struct Pullback<P> {
    /// Non-constant part of the pulled-back Lagrangian.
    pub lagrangian: P,
    pub constant: P,
    /// Reduced Hamiltonian without its constant.
    pub hamiltonian: P,
    /// `Σ ε Ξ` for quasi-canonical kinds, whose time derivative is dropped.
    pub total_derivative: Expr,
}

pub fn pullback_total_lagrangian<P: ChartPoly>(
    result: &DiracResult,
    chart: &CanonicalChart,
    plan: &EmbeddingPlan,
    table: &SymbolTable,
) -> Result<Pullback<P>> {
    let mut rules = plan.fixed_map();
    rules.extend(plan.gauge_multiplier_solutions.clone());
    let h: P = chart_hamiltonian::<P>(result, chart)?.subst(&plan.gauge_multiplier_solutions)?;
    let h = h.subst(&plan.fixed_map())?;
    let c = h.constant_part();
    let h_var = h.minus(&c);
    let n = chart.n();
    let mut kinetic = Expr::zero();
    let mut total_derivative = Expr::zero();
    for i in 0..n {
        let (x, y) = (chart.symbols[i], chart.symbols[i + n]);
        let xf = plan.is_fixed(x);
        let yf = plan.fixed.iter().find(|(v, _)| *v == y).map(|(_, c)| c.clone());
        match (xf, yf) {
            (false, None) => {
                let dx = table.velocity(x).ok_or_else(|| Error::Internal("chart symbol without velocity".into()))?;
                kinetic = &kinetic + &(Expr::var(y) * Expr::var(dx));
            }
            (false, Some(eps)) => {
                total_derivative = &total_derivative + &Expr::var(x).scale(&eps);
            }
            _ => {}
        }
    }
    let kin = P::lift(&kinetic)?;
    Ok(Pullback {
        lagrangian: kin.minus(&h_var),
        constant: P::lift(&Expr::zero())?.minus(&c),
        hamiltonian: h_var,
        total_derivative,
    })
}

/// Transformed total Hamiltonian with every primary first-class `Ψ` set
/// to zero.
pub fn effective_hamiltonian(result: &DiracResult, chart: &CanonicalChart) -> Result<Expr> {
    if result.first_class == 0 {
        return Err(Error::Precondition(
            "effective Hamiltonian needs first-class constraints".into(),
        ));
    }
    let h: Expr = chart_hamiltonian(result, chart)?;
    let rules = primary_psi_rows(result, chart)?
        .into_iter()
        .map(|i| (chart.symbols[i], Expr::zero()))
        .collect();
    Ok(h.substitute_unchecked(&rules)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BoundaryReport {
    pub embedding: String,
    pub fix_both_ends: Vec<String>,
    pub fix_initial_only: Vec<String>,
    pub endpoint: Endpoint,
    pub never_fix: Vec<String>,
    pub occupied: usize,
    pub total: usize,
    pub free_constant_count: usize,
    pub preconditions: Vec<String>,
}

impl BoundaryReport {
    /// `2·|both| + |initial| + occupied + |never| = 2n`.
    pub fn ledger_closes(&self) -> bool {
        2 * self.fix_both_ends.len() + self.fix_initial_only.len() + self.occupied + self.never_fix.len()
            == self.total
    }
}

pub fn boundary_report(
    result: &DiracResult,
    chart: &CanonicalChart,
    plan: &EmbeddingPlan,
    table: &SymbolTable,
) -> Result<BoundaryReport> {
    let n = chart.n();
    let name = |i: usize| table.name(chart.symbols[i]).to_string();
    let fix_both_ends = chart.rows_with(Role::Q).map(name).collect();
    let mut fix_initial_only = Vec::new();
    let mut never_fix = Vec::new();
    if plan.quasi {
        let primary = primary_psi_rows(result, chart)?;
        for i in chart.rows_with(Role::Xi) {
            if primary.contains(&(i + n)) {
                never_fix.push(name(i));
            } else {
                fix_initial_only.push(name(i));
            }
        }
    }
    let mut preconditions: Vec<String> = plan
        .fixed
        .iter()
        .map(|(v, c)| format!("{} := {} in advance", table.name(*v), c))
        .collect();
    for (z, e) in &plan.gauge_multiplier_solutions {
        preconditions.push(format!("{} = {}", table.name(*z), e.to_string_with(table)));
    }
    let budget = integral_constant_budget(result, plan);
    Ok(BoundaryReport {
        embedding: plan.name.to_string(),
        fix_both_ends,
        fix_initial_only,
        endpoint: plan.endpoint,
        never_fix,
        occupied: budget.occupied,
        total: budget.total,
        free_constant_count: budget.free,
        preconditions,
    })
}
