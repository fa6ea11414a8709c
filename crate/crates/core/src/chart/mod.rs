//! Linear canonical charts adapted to the constraints: construction,
//! verification, Hamiltonian transformation and the Frobenius check.

mod float;
mod json;

use std::collections::BTreeMap;
use std::fmt;

use num::{BigRational, One, Zero};
use serde::{Deserialize, Serialize};

use crate::dirac::{ConstraintClass, DiracResult};
use crate::error::{Error, Result};
use crate::linalg::{solve_linear, ExprMatrix, LinearSolution};
use crate::mechanics::PhaseSpace;
use crate::symkernel::{to_f64, Expr, SymbolKind, SymbolTable, Var};

pub use float::{fmt_float, FloatPoly};
pub use json::{ChartFile, ChartFileRow, Coefficient};

type Rat = BigRational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Xi,
    ThetaUp,
    Q,
    Psi,
    ThetaDown,
    P,
}

impl Role {
    pub fn stem(self) -> &'static str {
        match self {
            Role::Xi => "Xi",
            Role::Psi => "Psi",
            Role::ThetaUp => "Theta",
            Role::ThetaDown => "Theta_",
            Role::Q => "Q",
            Role::P => "P",
        }
    }

    pub fn is_position(self) -> bool {
        matches!(self, Role::Xi | Role::ThetaUp | Role::Q)
    }

    pub fn partner(self) -> Role {
        match self {
            Role::Xi => Role::Psi,
            Role::Psi => Role::Xi,
            Role::ThetaUp => Role::ThetaDown,
            Role::ThetaDown => Role::ThetaUp,
            Role::Q => Role::P,
            Role::P => Role::Q,
        }
    }

    /// Parses names such as `Xi2`, `Theta_1` or `c_P1`.
    pub fn parse_name(name: &str) -> Option<(Role, usize)> {
        let name = name.strip_prefix("c_").unwrap_or(name);
        let stems = [
            Role::ThetaDown,
            Role::ThetaUp,
            Role::Xi,
            Role::Psi,
            Role::Q,
            Role::P,
        ];
        stems.into_iter().find_map(|r| {
            let idx = name.strip_prefix(r.stem())?;
            if idx.is_empty() || !idx.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            idx.parse().ok().filter(|&k: &usize| k >= 1).map(|k| (r, k))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RowRole {
    pub role: Role,
    /// 1-based pairing index.
    pub index: usize,
}

impl fmt::Display for RowRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.role.stem(), self.index)
    }
}

/// Row coefficients in the `z = (q, p)` layout plus constant offsets, so
/// that chart coordinate `i` is `rows[i]·z + offsets[i]`.
#[derive(Clone, Debug, PartialEq)]
pub enum Entries {
    Exact { rows: Vec<Vec<Rat>>, offsets: Vec<Rat> },
    Float { rows: Vec<Vec<f64>>, offsets: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalChart {
    pub phase: PhaseSpace,
    /// Row `i < n` is position-like and pairs with row `n + i`.
    pub roles: Vec<RowRole>,
    pub entries: Entries,
    /// Chart symbols, one per row, once registered.
    pub symbols: Vec<Var>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub rows: (String, String),
    pub found: String,
    pub expected: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChartCheck {
    pub symplectic: bool,
    /// Row brackets differing from the canonical pattern.
    pub violations: Vec<Violation>,
}

/// `ω(u, v) = uᵀ J v`, the bracket of the linear forms `u·z` and `v·z`.
pub fn omega(u: &[Rat], v: &[Rat]) -> Rat {
    let n = u.len() / 2;
    (0..n).fold(Rat::zero(), |acc, i| acc + &u[i] * &v[n + i] - &u[n + i] * &v[i])
}

fn omega_f(u: &[f64], v: &[f64]) -> f64 {
    let n = u.len() / 2;
    (0..n).map(|i| u[i] * v[n + i] - u[n + i] * v[i]).sum()
}

/// Coefficients and constant of an expression affine in the phase-space
/// variables with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineForm {
    pub coeffs: Vec<Rat>,
    pub constant: Rat,
}

impl AffineForm {
    fn zero(dim: usize) -> Self {
        AffineForm {
            coeffs: vec![Rat::zero(); dim],
            constant: Rat::zero(),
        }
    }

    fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    fn axpy(&self, k: &Rat, o: &AffineForm) -> AffineForm {
        AffineForm {
            coeffs: self.coeffs.iter().zip(&o.coeffs).map(|(a, b)| a + k * b).collect(),
            constant: &self.constant + k * &o.constant,
        }
    }

    fn scale(&self, k: &Rat) -> AffineForm {
        AffineForm {
            coeffs: self.coeffs.iter().map(|a| a * k).collect(),
            constant: &self.constant * k,
        }
    }

    pub fn to_expr(&self, phase: &PhaseSpace) -> Expr {
        phase
            .z()
            .iter()
            .zip(&self.coeffs)
            .fold(Expr::constant(self.constant.clone()), |acc, (&v, c)| {
                &acc + &Expr::var(v).scale(c)
            })
    }
}

pub fn affine_form(e: &Expr, phase: &PhaseSpace) -> Option<AffineForm> {
    if !e.is_polynomial() || e.numer().degree() > 1 {
        return None;
    }
    let mut out = AffineForm::zero(2 * phase.n());
    for (m, c) in e.numer().terms() {
        match m.pairs() {
            [] => out.constant = c.clone(),
            [(v, 1)] => out.coeffs[phase.index_of(*v)?] = c.clone(),
            _ => return None,
        }
    }
    Some(out)
}

fn unit(dim: usize, i: usize) -> AffineForm {
    let mut f = AffineForm::zero(dim);
    f.coeffs[i] = Rat::one();
    f
}

/// Removes from `u` its components along the canonical pairs `(x, y)`.
fn project(u: &AffineForm, pairs: &[(AffineForm, AffineForm)]) -> AffineForm {
    pairs.iter().fold(u.clone(), |acc, (x, y)| {
        let a = omega(&acc.coeffs, &y.coeffs);
        let b = omega(&acc.coeffs, &x.coeffs);
        acc.axpy(&-a, x).axpy(&b, y)
    })
}

/// Builds a chart in which first-class constraints are the momenta `Ψ`,
/// second-class constraints form pairs `(Θ^, Θ_)` and the rest is `(Q, P)`.
/// Only constraints affine in the phase-space variables are supported.
pub fn build_chart(result: &DiracResult, table: &mut SymbolTable) -> Result<CanonicalChart> {
    let phase = &result.phase;
    let n = phase.n();
    let dim = 2 * n;
    let forms: Vec<AffineForm> = result
        .constraints
        .iter()
        .map(|c| {
            affine_form(&c.expr, phase).ok_or_else(|| {
                Error::Unsupported(format!(
                    "constraint {} is not linear with constant coefficients; supply a chart and use verify-chart",
                    c.expr.to_string_with(table)
                ))
            })
        })
        .collect::<Result<_>>()?;

    // Second-class pairs, chain order.
    let mut second: Vec<(AffineForm, usize)> = result
        .constraints
        .iter()
        .zip(&forms)
        .filter(|(c, _)| c.class == Some(ConstraintClass::Second))
        .map(|(c, f)| (f.clone(), c.generation))
        .collect();
    let mut theta: Vec<(AffineForm, AffineForm)> = Vec::new();
    while !second.is_empty() {
        let (a, ga) = second.remove(0);
        let j = second
            .iter()
            .position(|(b, _)| !omega(&a.coeffs, &b.coeffs).is_zero())
            .ok_or_else(|| Error::Internal("second-class constraint without a partner".into()))?;
        let (b, gb) = second.remove(j);
        let (up, down) = if gb > ga { (b, a) } else { (a, b) };
        let w = omega(&up.coeffs, &down.coeffs);
        let down = down.scale(&w.recip());
        let pair = [(up, down)];
        second = second
            .into_iter()
            .map(|(u, g)| (project(&u, &pair), g))
            .collect();
        let [p] = pair;
        theta.push(p);
    }

    // Conjugates of the first-class constraints.
    let psi: Vec<AffineForm> = result
        .constraints
        .iter()
        .zip(&forms)
        .filter(|(c, _)| c.class == Some(ConstraintClass::First))
        .map(|(_, f)| f.clone())
        .collect();
    let j_row = |v: &AffineForm| -> Vec<Expr> {
        (0..dim)
            .map(|i| {
                let c = if i < n { v.coeffs[n + i].clone() } else { -v.coeffs[i - n].clone() };
                Expr::constant(c)
            })
            .collect()
    };
    let mut xi: Vec<AffineForm> = Vec::new();
    for a in 0..psi.len() {
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        for (b, p) in psi.iter().enumerate() {
            rows.push(j_row(p));
            rhs.push(if a == b { Expr::one() } else { Expr::zero() });
        }
        for (u, d) in &theta {
            rows.push(j_row(u));
            rhs.push(Expr::zero());
            rows.push(j_row(d));
            rhs.push(Expr::zero());
        }
        for x in &xi {
            rows.push(j_row(x));
            rhs.push(Expr::zero());
        }
        let sol = match solve_linear(&ExprMatrix::from_rows(rows), &rhs) {
            LinearSolution::Solved { particular, .. } => particular,
            LinearSolution::Inconsistent { .. } => {
                return Err(Error::Internal("no conjugate for a first-class constraint".into()))
            }
        };
        let coeffs = sol
            .iter()
            .map(|e| e.as_constant().ok_or_else(|| Error::Internal("non-constant conjugate".into())))
            .collect::<Result<_>>()?;
        xi.push(AffineForm {
            coeffs,
            constant: Rat::zero(),
        });
    }

    // Physical pairs from the symplectic complement.
    let mut placed: Vec<(AffineForm, AffineForm)> = xi.iter().cloned().zip(psi.iter().cloned()).collect();
    placed.extend(theta.iter().cloned());
    let mut qp: Vec<(AffineForm, AffineForm)> = Vec::new();
    while placed.len() + qp.len() < n {
        let mut all = placed.clone();
        all.extend(qp.iter().cloned());
        let projected: Vec<AffineForm> = (0..dim).map(|i| project(&unit(dim, i), &all)).collect();
        let (k, q) = projected
            .iter()
            .enumerate()
            .find(|(_, u)| !u.is_zero())
            .ok_or_else(|| Error::Internal("symplectic complement exhausted".into()))?;
        let p = projected[k + 1..]
            .iter()
            .find(|w| !omega(&q.coeffs, &w.coeffs).is_zero())
            .or_else(|| projected[..k].iter().find(|w| !omega(&q.coeffs, &w.coeffs).is_zero()))
            .ok_or_else(|| Error::Internal("no conjugate in the symplectic complement".into()))?;
        let w = omega(&q.coeffs, &p.coeffs);
        qp.push((q.clone(), p.scale(&w.recip())));
    }

    let mut roles = Vec::new();
    let mut pos = Vec::new();
    let mut mom = Vec::new();
    for (role, list) in [(Role::Xi, xi.iter().cloned().zip(psi.iter().cloned()).collect::<Vec<_>>()), (Role::ThetaUp, theta), (Role::Q, qp)] {
        for (k, (x, y)) in list.into_iter().enumerate() {
            roles.push(RowRole { role, index: k + 1 });
            pos.push(x);
            mom.push(y);
        }
    }
    let mom_roles: Vec<RowRole> = roles
        .iter()
        .map(|r| RowRole {
            role: r.role.partner(),
            index: r.index,
        })
        .collect();
    roles.extend(mom_roles);
    pos.extend(mom);
    let mut chart = CanonicalChart {
        phase: phase.clone(),
        roles,
        entries: Entries::Exact {
            rows: pos.iter().map(|f| f.coeffs.clone()).collect(),
            offsets: pos.iter().map(|f| f.constant.clone()).collect(),
        },
        symbols: Vec::new(),
    };
    if !chart.verify().symplectic {
        return Err(Error::Internal("constructed chart is not symplectic".into()));
    }
    chart.register(table)?;
    Ok(chart)
}

/// Identity-free layout check: every position role has its partner at
/// `n + i` with the same index, and no role is repeated.
fn check_layout(roles: &[RowRole], n: usize) -> Result<()> {
    if roles.len() != 2 * n {
        return Err(Error::Input(format!("chart needs {} rows, got {}", 2 * n, roles.len())));
    }
    let mut seen = std::collections::BTreeSet::new();
    for (i, r) in roles.iter().enumerate() {
        if !seen.insert(*r) {
            return Err(Error::Input(format!("chart row {r} appears twice")));
        }
        if i < n && !r.role.is_position() {
            return Err(Error::Internal("chart layout out of order".into()));
        }
    }
    for r in roles.iter().filter(|r| r.role.is_position()) {
        let partner = RowRole {
            role: r.role.partner(),
            index: r.index,
        };
        if !seen.contains(&partner) {
            return Err(Error::Input(format!("chart row {r} has no partner {partner}")));
        }
    }
    Ok(())
}

impl CanonicalChart {
    /// Assembles a chart from rows in any order, reordering them into the
    /// canonical layout.
    pub fn from_rows(phase: &PhaseSpace, rows: Vec<(RowRole, Entry)>) -> Result<Self> {
        let n = phase.n();
        let mut rows = rows;
        rows.sort_by_key(|(r, _)| (!r.role.is_position(), r.role, r.index));
        // Position rows sorted by (role, index); momenta follow their partners.
        let positions: Vec<RowRole> = rows.iter().map(|(r, _)| *r).filter(|r| r.role.is_position()).collect();
        let mut ordered = Vec::new();
        for r in &positions {
            ordered.push(rows.iter().find(|(x, _)| x == r).unwrap().clone());
        }
        for r in &positions {
            let partner = RowRole {
                role: r.role.partner(),
                index: r.index,
            };
            let found = rows
                .iter()
                .find(|(x, _)| *x == partner)
                .ok_or_else(|| Error::Input(format!("chart row {r} has no partner {partner}")))?;
            ordered.push(found.clone());
        }
        if ordered.len() != rows.len() {
            let stray: Vec<String> = rows
                .iter()
                .filter(|(r, _)| !ordered.iter().any(|(x, _)| x == r))
                .map(|(r, _)| r.to_string())
                .collect();
            return Err(Error::Input(format!("chart rows without partner: {}", stray.join(", "))));
        }
        let roles: Vec<RowRole> = ordered.iter().map(|(r, _)| *r).collect();
        check_layout(&roles, n)?;
        for (r, e) in &ordered {
            if e.len() != 2 * n {
                return Err(Error::Input(format!("chart row {r} has {} entries, expected {}", e.len(), 2 * n)));
            }
        }
        let exact = ordered.iter().all(|(_, e)| matches!(e, Entry::Exact { .. }));
        let entries = if exact {
            let mut rs = Vec::new();
            let mut os = Vec::new();
            for (_, e) in ordered {
                if let Entry::Exact { coeffs, offset } = e {
                    rs.push(coeffs);
                    os.push(offset);
                }
            }
            Entries::Exact { rows: rs, offsets: os }
        } else {
            let (rs, os) = ordered.into_iter().map(|(_, e)| e.to_float()).unzip();
            Entries::Float { rows: rs, offsets: os }
        };
        Ok(CanonicalChart {
            phase: phase.clone(),
            roles,
            entries,
            symbols: Vec::new(),
        })
    }

    pub fn identity(phase: &PhaseSpace) -> Self {
        let n = phase.n();
        let rows = (0..2 * n).map(|i| unit(2 * n, i).coeffs).collect();
        let roles = (0..2 * n)
            .map(|i| RowRole {
                role: if i < n { Role::Q } else { Role::P },
                index: i % n + 1,
            })
            .collect();
        CanonicalChart {
            phase: phase.clone(),
            roles,
            entries: Entries::Exact {
                rows,
                offsets: vec![Rat::zero(); 2 * n],
            },
            symbols: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.phase.n()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.entries, Entries::Exact { .. })
    }

    /// Names of the chart coordinates, prefixed with `c_` when a plain name
    /// would clash with an existing non-chart symbol.
    pub fn names(&self, table: &SymbolTable) -> Vec<String> {
        let plain: Vec<String> = self.roles.iter().map(|r| r.to_string()).collect();
        let phase_vars = self.phase.vars();
        let clash = plain.iter().zip(&self.roles).any(|(name, r)| match table.get(name) {
            None => false,
            Some(v) => {
                let want = if r.role.is_position() { SymbolKind::Position } else { SymbolKind::Momentum };
                phase_vars.contains(&v) || table.kind(v) != want
            }
        });
        if clash {
            plain.into_iter().map(|s| format!("c_{s}")).collect()
        } else {
            plain
        }
    }

    pub fn register(&mut self, table: &mut SymbolTable) -> Result<()> {
        let names = self.names(table);
        self.symbols = names
            .iter()
            .zip(&self.roles)
            .map(|(name, r)| {
                let kind = if r.role.is_position() { SymbolKind::Position } else { SymbolKind::Momentum };
                table.add(name, kind).map_err(Error::from)
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    pub fn symbol(&self, role: Role, index: usize) -> Option<Var> {
        self.roles
            .iter()
            .position(|r| r.role == role && r.index == index)
            .and_then(|i| self.symbols.get(i).copied())
    }

    pub fn rows_with(&self, role: Role) -> impl Iterator<Item = usize> + '_ {
        (0..self.roles.len()).filter(move |&i| self.roles[i].role == role)
    }

    pub fn float_rows(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        match &self.entries {
            Entries::Exact { rows, offsets } => (
                rows.iter().map(|r| r.iter().map(to_f64).collect()).collect(),
                offsets.iter().map(to_f64).collect(),
            ),
            Entries::Float { rows, offsets } => (rows.clone(), offsets.clone()),
        }
    }

    /// Row `i` as an expression in the phase-space variables (exact charts).
    pub fn row_expr(&self, i: usize) -> Option<Expr> {
        match &self.entries {
            Entries::Exact { rows, offsets } => Some(
                AffineForm {
                    coeffs: rows[i].clone(),
                    constant: offsets[i].clone(),
                }
                .to_expr(&self.phase),
            ),
            Entries::Float { .. } => None,
        }
    }

    pub fn affine_row(&self, i: usize) -> Option<AffineForm> {
        match &self.entries {
            Entries::Exact { rows, offsets } => Some(AffineForm {
                coeffs: rows[i].clone(),
                constant: offsets[i].clone(),
            }),
            Entries::Float { .. } => None,
        }
    }

    /// Checks `SᵀJS = J` (exactly, or within 1e-12 per entry for float
    /// charts) and lists every row bracket off the canonical pattern.
    pub fn verify(&self) -> ChartCheck {
        let n = self.n();
        let expected = |i: usize, j: usize| -> i32 {
            if j == i + n {
                1
            } else if i == j + n {
                -1
            } else {
                0
            }
        };
        let label = |i: usize| self.roles[i].to_string();
        let mut violations = Vec::new();
        let symplectic;
        match &self.entries {
            Entries::Exact { rows, .. } => {
                for i in 0..2 * n {
                    for j in (i + 1)..2 * n {
                        let w = omega(&rows[i], &rows[j]);
                        if w != Rat::from_integer(expected(i, j).into()) {
                            violations.push(Violation {
                                rows: (label(i), label(j)),
                                found: w.to_string(),
                                expected: expected(i, j),
                            });
                        }
                    }
                }
                // SᵀJS column brackets: (SᵀJS)_{ab} = Σ_i,j S_ia J_ij S_jb.
                let cols: Vec<Vec<Rat>> = (0..2 * n).map(|a| rows.iter().map(|r| r[a].clone()).collect()).collect();
                symplectic = (0..2 * n).all(|a| {
                    (0..2 * n).all(|b| omega(&cols[a], &cols[b]) == Rat::from_integer(expected(a, b).into()))
                });
            }
            Entries::Float { rows, .. } => {
                for i in 0..2 * n {
                    for j in (i + 1)..2 * n {
                        let w = omega_f(&rows[i], &rows[j]);
                        if (w - expected(i, j) as f64).abs() > 1e-12 {
                            violations.push(Violation {
                                rows: (label(i), label(j)),
                                found: fmt_float(w),
                                expected: expected(i, j),
                            });
                        }
                    }
                }
                let cols: Vec<Vec<f64>> = (0..2 * n).map(|a| rows.iter().map(|r| r[a]).collect()).collect();
                symplectic = (0..2 * n).all(|a| {
                    (0..2 * n).all(|b| (omega_f(&cols[a], &cols[b]) - expected(a, b) as f64).abs() <= 1e-12)
                });
            }
        }
        ChartCheck {
            symplectic: symplectic && violations.is_empty(),
            violations,
        }
    }

    /// `z = S⁻¹(y − o)` with `S⁻¹ = −J Sᵀ J`; column `i` of `S⁻¹` gives the
    /// phase-space coordinate `z_i` as a combination of chart rows.
    fn inverse_exact(&self) -> Result<(Vec<Vec<Rat>>, &Vec<Rat>)> {
        let Entries::Exact { rows, offsets } = &self.entries else {
            return Err(Error::Precondition("exact transform needs an exact chart".into()));
        };
        if !self.verify().symplectic {
            return Err(Error::Precondition("chart is not symplectic".into()));
        }
        let n = self.n();
        // (−J Sᵀ J)_{ir} = ±S_{r'i'}, with primes swapping the halves.
        let inv = (0..2 * n)
            .map(|i| {
                (0..2 * n)
                    .map(|r| {
                        let rp = if r < n { r + n } else { r - n };
                        let ip = if i < n { i + n } else { i - n };
                        let c = rows[rp][ip].clone();
                        if (i < n) == (r < n) {
                            c
                        } else {
                            -c
                        }
                    })
                    .collect()
            })
            .collect();
        Ok((inv, offsets))
    }

    /// Rewrites `e` in chart symbols (exact charts only).
    pub fn transform(&self, e: &Expr) -> Result<Expr> {
        if self.symbols.len() != self.roles.len() {
            return Err(Error::Precondition("chart symbols are not registered".into()));
        }
        let (inv, offsets) = self.inverse_exact()?;
        let shifted: Vec<Expr> = self
            .symbols
            .iter()
            .zip(offsets)
            .map(|(&y, o)| Expr::var(y) - Expr::constant(o.clone()))
            .collect();
        let rules: BTreeMap<Var, Expr> = self
            .phase
            .z()
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let e = inv[i]
                    .iter()
                    .zip(&shifted)
                    .fold(Expr::zero(), |acc, (c, y)| &acc + &y.scale(c));
                (z, e)
            })
            .collect();
        Ok(e.substitute(&rules)?)
    }

    /// Float analogue of [`transform`](Self::transform); works for either
    /// kind of chart. `e` must have a constant denominator.
    pub fn transform_float(&self, e: &Expr) -> Result<FloatPoly> {
        if self.symbols.len() != self.roles.len() {
            return Err(Error::Precondition("chart symbols are not registered".into()));
        }
        let n = self.n();
        let (rows, offsets) = self.float_rows();
        let f = FloatPoly::from_expr(e)
            .ok_or_else(|| Error::Precondition("expression must be polynomial".into()))?;
        let shifted: Vec<FloatPoly> = self
            .symbols
            .iter()
            .zip(&offsets)
            .map(|(&y, &o)| FloatPoly::var(y).sub(&FloatPoly::constant(o)))
            .collect();
        let rules: BTreeMap<Var, FloatPoly> = self
            .phase
            .z()
            .iter()
            .enumerate()
            .map(|(i, &z)| {
                let ip = if i < n { i + n } else { i - n };
                let e = (0..2 * n).fold(FloatPoly::zero(), |acc, r| {
                    let rp = if r < n { r + n } else { r - n };
                    let c = rows[rp][ip];
                    let c = if (i < n) == (r < n) { c } else { -c };
                    acc.add(&shifted[r].scale(c))
                });
                (z, e)
            })
            .collect();
        Ok(f.substitute(&rules).cleaned(1e-13))
    }
}

/// One chart row as supplied by a user.
#[derive(Clone, Debug, PartialEq)]
pub enum Entry {
    Exact { coeffs: Vec<Rat>, offset: Rat },
    Float { coeffs: Vec<f64>, offset: f64 },
}

impl Entry {
    fn len(&self) -> usize {
        match self {
            Entry::Exact { coeffs, .. } => coeffs.len(),
            Entry::Float { coeffs, .. } => coeffs.len(),
        }
    }

    fn to_float(self) -> (Vec<f64>, f64) {
        match self {
            Entry::Exact { coeffs, offset } => (coeffs.iter().map(to_f64).collect(), to_f64(&offset)),
            Entry::Float { coeffs, offset } => (coeffs, offset),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrobeniusReport {
    /// Residual per position coordinate.
    pub residuals: Vec<(Var, Expr)>,
    pub constraint_count: usize,
    pub limit: usize,
    pub pass: bool,
}

/// Residuals `−Σ ζ^α ∂Φ_α/∂q^i` over free multipliers, reduced on the
/// constraint surface, together with the constraint budget `≤ 2n`.
pub fn frobenius_check(result: &DiracResult) -> Result<FrobeniusReport> {
    let free: Vec<(Var, &Expr)> = result
        .free_multipliers
        .iter()
        .map(|z| {
            let chain = result.zetas.iter().position(|x| x == z).unwrap();
            let c = result
                .primaries()
                .find(|c| c.chain == chain)
                .ok_or_else(|| Error::Internal("free multiplier without primary".into()))?;
            Ok((*z, &c.expr))
        })
        .collect::<Result<_>>()?;
    let mut residuals = Vec::new();
    for q in result.phase.positions() {
        let r = free.iter().fold(Expr::zero(), |acc, (z, phi)| &acc - &(Expr::var(*z) * phi.diff(q)));
        residuals.push((q, result.reducer.reduce(&r)?));
    }
    let limit = 2 * result.n();
    let count = result.constraints.len();
    Ok(FrobeniusReport {
        pass: count <= limit && residuals.iter().all(|(_, r)| r.is_zero()),
        residuals,
        constraint_count: count,
        limit,
    })
}
