use num::{BigInt, BigRational, Zero};
use serde::{Deserialize, Serialize};

use super::{CanonicalChart, Entries, Entry, Role, RowRole};
use crate::error::{Error, Result};
use crate::mechanics::PhaseSpace;
use crate::symkernel::SymbolTable;

/// A chart entry: a rational written as a string (`"-2/3"`) or a JSON
/// number. Non-integral numbers put the chart in float mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Rational(String),
    Number(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartFileRow {
    pub role: Role,
    pub index: usize,
    /// One entry per phase-space variable, in the order of `phase`.
    pub coefficients: Vec<Coefficient>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Coefficient>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartFile {
    pub schema_version: u32,
    /// Phase-space variable names labelling the columns.
    pub phase: Vec<String>,
    pub rows: Vec<ChartFileRow>,
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    (!d.is_zero()).then(|| BigRational::new(n, d))
}

enum Value {
    Exact(BigRational),
    Float(f64),
}

impl Coefficient {
    fn value(&self) -> Result<Value> {
        match self {
            Coefficient::Rational(s) => parse_rational(s)
                .map(Value::Exact)
                .ok_or_else(|| Error::Input(format!("`{s}` is not a rational number"))),
            Coefficient::Number(x) if !x.is_finite() => {
                Err(Error::Input("chart entry is not finite".into()))
            }
            Coefficient::Number(x) if x.fract() == 0.0 && x.abs() < 1e15 => {
                Ok(Value::Exact(BigRational::from_integer(BigInt::from(*x as i64))))
            }
            Coefficient::Number(x) => Ok(Value::Float(*x)),
        }
    }
}

impl ChartFile {
    pub const SCHEMA_VERSION: u32 = 1;

    pub fn from_chart(chart: &CanonicalChart, table: &SymbolTable) -> Self {
        let phase = chart.phase.z().iter().map(|&v| table.name(v).to_string()).collect();
        let rows = match &chart.entries {
            Entries::Exact { rows, offsets } => rows
                .iter()
                .zip(offsets)
                .zip(&chart.roles)
                .map(|((r, o), role)| ChartFileRow {
                    role: role.role,
                    index: role.index,
                    coefficients: r.iter().map(|c| Coefficient::Rational(c.to_string())).collect(),
                    offset: (!o.is_zero()).then(|| Coefficient::Rational(o.to_string())),
                })
                .collect(),
            Entries::Float { rows, offsets } => rows
                .iter()
                .zip(offsets)
                .zip(&chart.roles)
                .map(|((r, &o), role)| ChartFileRow {
                    role: role.role,
                    index: role.index,
                    coefficients: r.iter().map(|&c| Coefficient::Number(c)).collect(),
                    offset: (o != 0.0).then_some(Coefficient::Number(o)),
                })
                .collect(),
        };
        ChartFile {
            schema_version: Self::SCHEMA_VERSION,
            phase,
            rows,
        }
    }

    /// Converts to a chart over `phase`, matching columns by name.
    pub fn to_chart(&self, phase: &PhaseSpace, table: &SymbolTable) -> Result<CanonicalChart> {
        if self.schema_version != Self::SCHEMA_VERSION {
            return Err(Error::Input(format!(
                "unsupported chart schema_version {}",
                self.schema_version
            )));
        }
        let z = phase.z();
        if self.phase.len() != z.len() {
            return Err(Error::Input(format!(
                "chart has {} columns, phase space has {}",
                self.phase.len(),
                z.len()
            )));
        }
        let cols: Vec<usize> = self
            .phase
            .iter()
            .map(|name| {
                table
                    .get(name)
                    .and_then(|v| phase.index_of(v))
                    .ok_or_else(|| Error::Input(format!("chart column `{name}` is not a phase-space variable")))
            })
            .collect::<Result<_>>()?;
        let mut rows = Vec::new();
        for row in &self.rows {
            if row.coefficients.len() != z.len() {
                return Err(Error::Input(format!(
                    "chart row {}{} has {} entries",
                    row.role.stem(),
                    row.index,
                    row.coefficients.len()
                )));
            }
            let mut vals: Vec<Value> = Vec::new();
            for c in &row.coefficients {
                vals.push(c.value()?);
            }
            let offset = match &row.offset {
                Some(c) => c.value()?,
                None => Value::Exact(BigRational::zero()),
            };
            let exact = vals.iter().chain([&offset]).all(|v| matches!(v, Value::Exact(_)));
            let entry = if exact {
                let mut coeffs = vec![BigRational::zero(); z.len()];
                for (k, v) in vals.into_iter().enumerate() {
                    if let Value::Exact(r) = v {
                        coeffs[cols[k]] = r;
                    }
                }
                let Value::Exact(offset) = offset else { unreachable!() };
                Entry::Exact { coeffs, offset }
            } else {
                let f = |v: &Value| match v {
                    Value::Exact(r) => crate::symkernel::to_f64(r),
                    Value::Float(x) => *x,
                };
                let mut coeffs = vec![0.0; z.len()];
                for (k, v) in vals.iter().enumerate() {
                    coeffs[cols[k]] = f(v);
                }
                Entry::Float {
                    coeffs,
                    offset: f(&offset),
                }
            };
            rows.push((
                RowRole {
                    role: row.role,
                    index: row.index,
                },
                entry,
            ));
        }
        CanonicalChart::from_rows(phase, rows)
    }
}
