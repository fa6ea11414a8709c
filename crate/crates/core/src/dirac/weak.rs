use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mechanics::PhaseSpace;
use crate::symkernel::{Expr, Var};

/// Reduction modulo a set of constraints by solving each for one variable
/// in which it is affine. Momenta are preferred over positions, and a
/// constant coefficient over a field-dependent one.
#[derive(Clone, Debug)]
pub struct WeakReducer {
    rules: BTreeMap<Var, Expr>,
    /// `(variable, constraint index)` in solve order.
    solved: Vec<(Var, usize)>,
    /// Field-dependent coefficients divided by; assumed nonvanishing.
    assumptions: Vec<Expr>,
}

fn substitute_one(e: &Expr, v: Var, by: &Expr) -> Result<Expr> {
    let mut r = BTreeMap::new();
    r.insert(v, by.clone());
    Ok(e.substitute_unchecked(&r)?)
}

/// `v = −num|_{v=0} / (∂num/∂v)` when `e` is affine in `v`.
fn solve_for(e: &Expr, v: Var) -> Option<(Expr, Expr)> {
    if e.denom().contains_var(v) || e.numer().degree_in(v) != 1 {
        return None;
    }
    let coef = Expr::from(e.numer().derivative(v));
    let rest = Expr::from(e.numer().clone()).subs_var(v, &Expr::zero());
    Some(((-rest).checked_div(&coef)?, coef))
}

impl WeakReducer {
    pub fn new(constraints: &[Expr], phase: &PhaseSpace) -> Result<Self> {
        let order: Vec<Var> = phase.momenta().chain(phase.positions()).collect();
        let mut w = WeakReducer {
            rules: BTreeMap::new(),
            solved: Vec::new(),
            assumptions: Vec::new(),
        };
        for (idx, c) in constraints.iter().enumerate() {
            let r = w.reduce(c)?;
            if r.is_zero() {
                continue;
            }
            let pick = order
                .iter()
                .filter_map(|&v| solve_for(&r, v).map(|(s, k)| (v, s, k)))
                .min_by_key(|(_, _, k)| !k.is_constant());
            let Some((v, sol, coef)) = pick else {
                return Err(Error::Unsupported(format!(
                    "constraint {} is not affine in any phase-space variable after reduction",
                    idx + 1
                )));
            };
            if !coef.is_constant() {
                w.assumptions.push(coef);
            }
            for rhs in w.rules.values_mut() {
                *rhs = substitute_one(rhs, v, &sol)?;
            }
            w.rules.insert(v, sol);
            w.solved.push((v, idx));
        }
        Ok(w)
    }

    pub fn reduce(&self, e: &Expr) -> Result<Expr> {
        Ok(e.substitute_unchecked(&self.rules)?)
    }

    pub fn is_weakly_zero(&self, e: &Expr) -> Result<bool> {
        Ok(self.reduce(e)?.is_zero())
    }

    pub fn rules(&self) -> &BTreeMap<Var, Expr> {
        &self.rules
    }

    pub fn solved(&self) -> &[(Var, usize)] {
        &self.solved
    }

    /// Number of functionally independent constraints seen.
    pub fn rank(&self) -> usize {
        self.solved.len()
    }

    pub fn assumptions(&self) -> &[Expr] {
        &self.assumptions
    }
}

/// Reduces `e` modulo `constraints`.
pub fn weak_reduce(e: &Expr, constraints: &[Expr], phase: &PhaseSpace) -> Result<Expr> {
    WeakReducer::new(constraints, phase)?.reduce(e)
}
