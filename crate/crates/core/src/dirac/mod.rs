//! Poisson brackets, the constraint algorithm and first/second-class
//! classification.

mod weak;

use std::collections::{BTreeMap, BTreeSet};

use num::Signed;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{gauss_jordan, normalize_leading, null_space, rank, reduce_augmented, ExprMatrix};
use crate::mechanics::{FirstOrderSystem, PhaseSpace};
use crate::symkernel::{gcd, Expr, SymbolKind, SymbolTable, Var};

pub use weak::{weak_reduce, WeakReducer};

/// `{f, g} = Σ ∂f/∂q ∂g/∂p − ∂f/∂p ∂g/∂q`. Non-phase symbols are constants.
pub fn poisson(f: &Expr, g: &Expr, phase: &PhaseSpace) -> Expr {
    phase.pairs().iter().fold(Expr::zero(), |acc, &(q, p)| {
        let a = f.diff(q) * g.diff(p);
        let b = f.diff(p) * g.diff(q);
        &acc + &(a - b)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintClass {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub expr: Expr,
    /// 0 for primaries, `k` for constraints found in the `k`-th step of a chain.
    pub generation: usize,
    /// Index of the primary heading the chain.
    pub chain: usize,
    pub class: Option<ConstraintClass>,
    /// Set when the raw candidate had a repeated factor.
    pub repeated_factor: bool,
    /// The raw candidate, when it was replaced by its square-free part.
    pub original: Option<Expr>,
}

impl Constraint {
    fn primary(expr: Expr, chain: usize) -> Self {
        Constraint {
            expr,
            generation: 0,
            chain,
            class: None,
            repeated_factor: false,
            original: None,
        }
    }

    pub fn is_primary(&self) -> bool {
        self.generation == 0
    }
}

/// Outcome of the square-free check on a candidate constraint.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Normalized {
    pub expr: Expr,
    pub repeated_factor: bool,
    pub replaced: bool,
}

/// Replaces a candidate with a repeated factor by its monic square-free
/// part when that part is affine; otherwise the candidate is kept and
/// flagged. The sign is fixed so the leading coefficient is positive.
pub fn normalize_candidate(e: &Expr) -> Normalized {
    let e = &if e.numer().leading_coeff().is_negative() { -e } else { e.clone() };
    let n = e.numer().clone();
    let base = if e.denom().is_one() { e.clone() } else { Expr::from(n.clone()) };
    let g = n.vars().into_iter().fold(n.clone(), |g, v| gcd(&g, &n.derivative(v)));
    if g.is_constant() {
        return Normalized {
            expr: base,
            repeated_factor: false,
            replaced: false,
        };
    }
    let rad = n.div_exact(&g).expect("gcd divides");
    if rad.degree() == 1 {
        Normalized {
            expr: Expr::from(rad.monic()),
            repeated_factor: true,
            replaced: true,
        }
    } else {
        Normalized {
            expr: base,
            repeated_factor: true,
            replaced: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct DiracResult {
    pub phase: PhaseSpace,
    pub hamiltonian: Expr,
    /// Ordered by `(generation, chain)`.
    pub constraints: Vec<Constraint>,
    pub zetas: Vec<Var>,
    /// Solved multipliers; may mention free multipliers.
    pub multipliers: BTreeMap<Var, Expr>,
    pub free_multipliers: Vec<Var>,
    /// `H + Σ ζ Φ` with solved multipliers substituted.
    pub total_hamiltonian: Expr,
    /// `G_ab = {χ_a, χ_b}` reduced on the constraint surface.
    pub brackets: ExprMatrix,
    pub first_class: usize,
    pub second_class: usize,
    /// Field-dependent pivots assumed nonvanishing.
    pub assumptions: Vec<Expr>,
    pub reducer: WeakReducer,
    /// The primary basis was changed to isolate first-class combinations.
    pub rebased: bool,
}

impl DiracResult {
    pub fn n(&self) -> usize {
        self.phase.n()
    }

    pub fn dof(&self) -> usize {
        (2 * self.n() - 2 * self.first_class - self.second_class) / 2
    }

    pub fn primaries(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(|c| c.is_primary())
    }

    pub fn primary_count(&self) -> usize {
        self.primaries().count()
    }

    pub fn exprs(&self) -> Vec<Expr> {
        self.constraints.iter().map(|c| c.expr.clone()).collect()
    }

    pub fn of_class(&self, class: ConstraintClass) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(move |c| c.class == Some(class))
    }

    /// Primary constraint heading chain `i`, paired with its multiplier.
    pub fn primary_with_multiplier(&self, chain: usize) -> Option<(&Constraint, Var)> {
        self.primaries()
            .find(|c| c.chain == chain)
            .map(|c| (c, self.zetas[chain]))
    }
}

fn exprs(cons: &[Constraint]) -> Vec<Expr> {
    cons.iter().map(|c| c.expr.clone()).collect()
}

/// Splits `r` as `Σ A_j ζ_j + b`, failing when it is not affine in `ζ`.
fn split_affine(r: &Expr, zetas: &[Var]) -> Result<(Vec<Expr>, Expr)> {
    let zs: BTreeSet<Var> = zetas.iter().copied().collect();
    if r.denom().vars().iter().any(|v| zs.contains(v)) || r.numer().degree_in_set(&zs) > 1 {
        return Err(Error::Internal("consistency condition is not affine in the multipliers".into()));
    }
    let zero: BTreeMap<Var, Expr> = zetas.iter().map(|&z| (z, Expr::zero())).collect();
    let b = r.substitute_unchecked(&zero)?;
    Ok((zetas.iter().map(|&z| r.diff(z)).collect(), b))
}

struct Iteration {
    constraints: Vec<Constraint>,
    reducer: WeakReducer,
    coefficients: ExprMatrix,
    rhs: Vec<Expr>,
}

fn consistency(
    cons: &[Constraint],
    h_t: &Expr,
    zetas: &[Var],
    reducer: &WeakReducer,
    phase: &PhaseSpace,
) -> Result<(ExprMatrix, Vec<Expr>)> {
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for c in cons {
        let r = reducer.reduce(&poisson(&c.expr, h_t, phase))?;
        let (a, b) = split_affine(&r, zetas)?;
        rows.push(a);
        rhs.push(-b);
    }
    Ok((
        ExprMatrix::from_fn(rows.len(), zetas.len(), |i, j| rows[i][j].clone()),
        rhs,
    ))
}

fn iterate(
    phase: &PhaseSpace,
    h: &Expr,
    primaries: &[Expr],
    zetas: &[Var],
) -> Result<Iteration> {
    let h_t = primaries
        .iter()
        .zip(zetas)
        .fold(h.clone(), |acc, (p, &z)| &acc + &(Expr::var(z) * p));
    let limit = 2 * phase.n();
    let mut cons: Vec<Constraint> = primaries
        .iter()
        .enumerate()
        .map(|(i, p)| Constraint::primary(p.clone(), i))
        .collect();
    if cons.len() > limit {
        return Err(Error::BudgetExceeded {
            count: cons.len(),
            limit,
        });
    }
    loop {
        let mut reducer = WeakReducer::new(&exprs(&cons), phase)?;
        let (a, rhs) = consistency(&cons, &h_t, zetas, &reducer, phase)?;
        let red = reduce_augmented(&a, &rhs);
        let mut added = false;
        for (y, res) in &red.residuals {
            let res = reducer.reduce(res)?;
            if res.is_zero() {
                continue;
            }
            if let Some(c) = res.as_constant() {
                return Err(Error::Inconsistent(format!(
                    "consistency conditions demand {c} = 0"
                )));
            }
            let src = y
                .iter()
                .rposition(|e| !e.is_zero())
                .ok_or_else(|| Error::Internal("empty row combination".into()))?;
            let norm = normalize_candidate(&res);
            if reducer.reduce(&norm.expr)?.is_zero() {
                continue;
            }
            cons.push(Constraint {
                expr: norm.expr,
                generation: cons[src].generation + 1,
                chain: cons[src].chain,
                class: None,
                repeated_factor: norm.repeated_factor,
                original: norm.replaced.then(|| -res.clone()),
            });
            if cons.len() > limit {
                return Err(Error::BudgetExceeded {
                    count: cons.len(),
                    limit,
                });
            }
            reducer = WeakReducer::new(&exprs(&cons), phase)?;
            added = true;
        }
        if !added {
            break;
        }
    }
    cons.sort_by_key(|c| (c.generation, c.chain));
    let reducer = WeakReducer::new(&exprs(&cons), phase)?;
    let (coefficients, rhs) = consistency(&cons, &h_t, zetas, &reducer, phase)?;
    Ok(Iteration {
        constraints: cons,
        reducer,
        coefficients,
        rhs,
    })
}

fn multiplier_zetas(k: usize, table: &mut SymbolTable) -> Result<Vec<Var>> {
    (1..=k)
        .map(|i| {
            let name = format!("zeta{i}");
            table
                .add(&name, SymbolKind::Multiplier)
                .map_err(|e| Error::Input(format!("multiplier `{name}`: {e}")))
        })
        .collect()
}

fn bracket_matrix(cons: &[Constraint], reducer: &WeakReducer, phase: &PhaseSpace) -> Result<ExprMatrix> {
    let m = cons.len();
    let mut g = ExprMatrix::zeros(m, m);
    for i in 0..m {
        for j in (i + 1)..m {
            let v = reducer.reduce(&poisson(&cons[i].expr, &cons[j].expr, phase))?;
            g.set(j, i, -&v);
            g.set(i, j, v);
        }
    }
    Ok(g)
}

fn combine(coeffs: &[Expr], items: &[Expr]) -> Expr {
    coeffs
        .iter()
        .zip(items)
        .fold(Expr::zero(), |acc, (c, e)| &acc + &(c * e))
}

/// Kernel combinations followed by the standard vectors that complete them
/// to a basis, in index order.
fn completed_basis(kernel: &[Vec<Expr>], dim: usize) -> Vec<Vec<Expr>> {
    let mut basis: Vec<Vec<Expr>> = kernel.to_vec();
    for i in 0..dim {
        let mut e = vec![Expr::zero(); dim];
        e[i] = Expr::one();
        let mut trial = basis.clone();
        trial.push(e.clone());
        if rank(&ExprMatrix::from_rows(trial)) > basis.len() {
            basis.push(e);
        }
        if basis.len() == dim {
            break;
        }
    }
    basis
}

fn is_unit(v: &[Expr]) -> bool {
    v.iter().filter(|e| !e.is_zero()).count() == 1
}

/// Runs the constraint algorithm to a fixpoint, solves the multipliers and
/// classifies the constraints. When the bracket matrix shows that only a
/// combination of primaries is first class, the primaries are re-based on
/// that combination and the algorithm is rerun.
pub fn analyze(fo: &FirstOrderSystem, table: &mut SymbolTable) -> Result<DiracResult> {
    let phase = &fo.phase;
    let zetas = multiplier_zetas(fo.primaries.len(), table)?;
    let mut primaries = fo.primaries.clone();
    let mut it = iterate(phase, &fo.hamiltonian, &primaries, &zetas)?;
    let mut g = bracket_matrix(&it.constraints, &it.reducer, phase)?;
    let mut rebased = false;

    let prim_cols: Vec<usize> = (0..primaries.len()).collect();
    let kernel: Vec<Vec<Expr>> = null_space(&g.select_cols(&prim_cols))
        .iter()
        .map(|v| normalize_leading(v))
        .collect();
    if !kernel.is_empty() && !kernel.iter().all(|v| is_unit(v)) {
        // Primaries sit at the front since they have generation 0.
        let current: Vec<Expr> = it.constraints[..primaries.len()]
            .iter()
            .map(|c| c.expr.clone())
            .collect();
        primaries = completed_basis(&kernel, primaries.len())
            .iter()
            .map(|v| combine(v, &current))
            .collect();
        it = iterate(phase, &fo.hamiltonian, &primaries, &zetas)?;
        g = bracket_matrix(&it.constraints, &it.reducer, phase)?;
        rebased = true;
    }

    let m = it.constraints.len();
    let s = rank(&g);
    let f = m - s;
    let mut cons = it.constraints;
    for (j, c) in cons.iter_mut().enumerate() {
        let zero_col = (0..m).all(|i| g.get(i, j).is_zero());
        c.class = Some(if zero_col { ConstraintClass::First } else { ConstraintClass::Second });
    }
    let labelled_first = cons.iter().filter(|c| c.class == Some(ConstraintClass::First)).count();
    if labelled_first != f {
        cons = general_rebase(cons, &g)?;
        let reducer = WeakReducer::new(&exprs(&cons), phase)?;
        g = bracket_matrix(&cons, &reducer, phase)?;
        it.reducer = reducer;
    }

    let ech = gauss_jordan(
        &ExprMatrix::from_fn(m, zetas.len() + 1, |i, j| {
            if j < zetas.len() {
                it.coefficients.get(i, j).clone()
            } else {
                it.rhs[i].clone()
            }
        }),
        zetas.len(),
    );
    let k = zetas.len();
    let pivot_cols: Vec<usize> = ech.pivots.iter().map(|&(_, c)| c).collect();
    let free: Vec<usize> = (0..k).filter(|c| !pivot_cols.contains(c)).collect();
    let mut multipliers = BTreeMap::new();
    for &(r, c) in &ech.pivots {
        let mut v = ech.reduced.get(r, k).clone();
        for &fc in &free {
            v = &v - &(ech.reduced.get(r, fc) * Expr::var(zetas[fc]));
        }
        multipliers.insert(zetas[c], it.reducer.reduce(&v)?);
    }
    let mut assumptions: Vec<Expr> = fo.pivots.clone();
    assumptions.extend(it.reducer.assumptions().iter().cloned());
    assumptions.extend(ech.pivot_values.iter().filter(|p| !p.is_constant()).cloned());

    let prim_exprs: Vec<Expr> = primaries.clone();
    let h_t = prim_exprs
        .iter()
        .zip(&zetas)
        .fold(fo.hamiltonian.clone(), |acc, (p, &z)| {
            let coef = multipliers.get(&z).cloned().unwrap_or_else(|| Expr::var(z));
            &acc + &(coef * p)
        });
    for c in &cons {
        let r = it.reducer.reduce(&poisson(&c.expr, &h_t, phase))?;
        if !r.is_zero() {
            return Err(Error::Internal(format!(
                "constraint {} is not preserved by the total Hamiltonian",
                c.expr.to_string_with(table)
            )));
        }
    }

    Ok(DiracResult {
        phase: phase.clone(),
        hamiltonian: fo.hamiltonian.clone(),
        constraints: cons,
        zetas: zetas.clone(),
        multipliers,
        free_multipliers: free.iter().map(|&c| zetas[c]).collect(),
        total_hamiltonian: h_t,
        brackets: g,
        first_class: f,
        second_class: s,
        assumptions,
        reducer: it.reducer,
        rebased,
    })
}

/// Replaces the constraint set by kernel combinations of the full bracket
/// matrix (first class) and a complement drawn from the original
/// constraints (second class).
fn general_rebase(cons: Vec<Constraint>, g: &ExprMatrix) -> Result<Vec<Constraint>> {
    let m = cons.len();
    let items = exprs(&cons);
    let kernel: Vec<Vec<Expr>> = null_space(g).iter().map(|v| normalize_leading(v)).collect();
    let basis = completed_basis(&kernel, m);
    let mut out = Vec::new();
    for (i, v) in basis.iter().enumerate() {
        let lead = v
            .iter()
            .enumerate()
            .filter(|(_, e)| !e.is_zero())
            .max_by_key(|(j, _)| (cons[*j].generation, *j))
            .map(|(j, _)| j)
            .ok_or_else(|| Error::Internal("zero basis vector".into()))?;
        out.push(Constraint {
            expr: combine(v, &items),
            generation: cons[lead].generation,
            chain: cons[lead].chain,
            class: Some(if i < kernel.len() {
                ConstraintClass::First
            } else {
                ConstraintClass::Second
            }),
            repeated_factor: cons[lead].repeated_factor,
            original: None,
        });
    }
    Ok(out)
}
