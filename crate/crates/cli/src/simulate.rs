//! `simulate`: integrates the reduced dynamics between two boundary times.

use serde::Serialize;
use wellposed_core::chart::{CanonicalChart, FloatPoly, Role};
use wellposed_core::embedding::{pullback_total_lagrangian, EmbeddingPlan};
use wellposed_core::error::{Error, Result};
use wellposed_core::numerics::{
    compile_field, integrate, is_unit_oscillator, oscillator_constants, solve_iota, ReducedField, Trajectory,
};
use wellposed_core::symkernel::{parse_expr, Expr, SymbolKind, SymbolTable};

use crate::pipeline::{Session, SCHEMA_VERSION};

#[derive(Clone, Debug)]
pub struct SimulateRequest {
    pub t1: f64,
    pub t2: f64,
    pub step: f64,
    /// `(Q name, Q(t1), Q(t2))`.
    pub boundary: Vec<(String, f64, f64)>,
    /// Initial values of gauge coordinates fixed only at `t1`.
    pub initial_only: Vec<(String, f64)>,
}

/// Parses a time such as `1.5`, `pi/2` or `3*pi/4`.
pub fn parse_time(text: &str) -> Result<f64> {
    if let Ok(x) = text.trim().parse::<f64>() {
        return Ok(x);
    }
    let mut table = SymbolTable::new();
    let pi = table.add("pi", SymbolKind::Parameter)?;
    let e = parse_expr(text, &table).map_err(|e| Error::Input(format!("time `{text}`: {e}")))?;
    if e.vars().iter().any(|&v| v != pi) {
        return Err(Error::Input(format!("time `{text}` may only mention pi")));
    }
    Ok(e.eval_f64(&|_| std::f64::consts::PI))
}

#[derive(Clone, Debug, Serialize)]
pub struct Value {
    pub name: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryValue {
    pub name: String,
    pub t1: f64,
    pub t2: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Complex {
    pub re: f64,
    pub im: f64,
}

/// `Q(t) = A e^{it} + B e^{-it}` for the unit oscillator.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct OscillatorConstants {
    pub a: Complex,
    pub b: Complex,
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationSummary {
    pub schema_version: u32,
    pub system: String,
    pub embedding: String,
    pub hamiltonian: String,
    pub t1: f64,
    pub t2: f64,
    pub step: f64,
    pub boundary: Vec<BoundaryValue>,
    pub initial_only: Vec<Value>,
    /// The reconstructed state at `t1`: the integral constants.
    pub initial_state: Vec<Value>,
    pub final_state: Vec<Value>,
    pub iterations: usize,
    pub residual: f64,
    pub energy_drift: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oscillator: Option<OscillatorConstants>,
}

pub struct Simulation {
    pub summary: SimulationSummary,
    pub field: ReducedField,
    pub trajectory: Trajectory,
}

fn reduced_hamiltonian(session: &Session, chart: &CanonicalChart, plan: &EmbeddingPlan) -> Result<FloatPoly> {
    let (d, t) = (&session.dirac, &session.table);
    if chart.is_exact() {
        let h = pullback_total_lagrangian::<Expr>(d, chart, plan, t)?.hamiltonian;
        FloatPoly::from_expr(&h).ok_or_else(|| Error::Precondition("reduced Hamiltonian is not polynomial".into()))
    } else {
        Ok(pullback_total_lagrangian::<FloatPoly>(d, chart, plan, t)?.hamiltonian)
    }
}

pub fn simulate(
    session: &Session,
    chart: &CanonicalChart,
    plan: &EmbeddingPlan,
    req: &SimulateRequest,
) -> Result<Simulation> {
    let table = &session.table;
    let n = chart.n();
    let qs: Vec<usize> = chart.rows_with(Role::Q).collect();
    let q: Vec<_> = qs.iter().map(|&i| chart.symbols[i]).collect();
    let p: Vec<_> = qs.iter().map(|&i| chart.symbols[i + n]).collect();
    let h = reduced_hamiltonian(session, chart, plan)?.cleaned(1e-13);
    let time = table.get("t").filter(|&v| table.kind(v) == SymbolKind::Time);
    let field = compile_field(&h, &q, &p, time, table)?;

    let mut start = Vec::new();
    let mut end = Vec::new();
    for &v in &q {
        let name = table.name(v);
        let (_, a, b) = req
            .boundary
            .iter()
            .find(|(n, _, _)| n == name)
            .ok_or_else(|| Error::Input(format!("missing boundary values for `{name}`")))?;
        start.push(*a);
        end.push(*b);
    }
    if let Some((name, _, _)) = req.boundary.iter().find(|(n, _, _)| !q.iter().any(|&v| table.name(v) == n)) {
        return Err(Error::Input(format!("`{name}` is not a physical position of the chart")));
    }
    let report = wellposed_core::embedding::boundary_report(&session.dirac, chart, plan, table)?;
    for (name, _) in &req.initial_only {
        if !report.fix_initial_only.contains(name) {
            return Err(Error::Input(format!("`{name}` is not fixed at t1 only by the {} embedding", plan.name)));
        }
    }

    let sol = solve_iota(&field, req.t1, req.t2, &start, &end, req.step)?;
    let trajectory = integrate(&field, &sol.initial_state, req.t1, req.t2, req.step)?;
    let names: Vec<&str> = q.iter().chain(&p).map(|&v| table.name(v)).collect();
    let values = |z: &[f64]| {
        names
            .iter()
            .zip(z)
            .map(|(n, &x)| Value {
                name: n.to_string(),
                value: x,
            })
            .collect()
    };
    let oscillator = (q.len() == 1 && is_unit_oscillator(&h, q[0], p[0])).then(|| {
        let v = field.eval(&sol.initial_state, req.t1)[0];
        let (a, b) = oscillator_constants(req.t1, sol.initial_state[0], v);
        OscillatorConstants {
            a: Complex { re: a.re + 0.0, im: a.im + 0.0 },
            b: Complex { re: b.re + 0.0, im: b.im + 0.0 },
        }
    });
    let summary = SimulationSummary {
        schema_version: SCHEMA_VERSION,
        system: session.file.name.clone(),
        embedding: plan.name.to_string(),
        hamiltonian: h.to_string_with(table),
        t1: req.t1,
        t2: req.t2,
        step: req.step,
        boundary: q
            .iter()
            .zip(start.iter().zip(&end))
            .map(|(&v, (&a, &b))| BoundaryValue {
                name: table.name(v).to_string(),
                t1: a,
                t2: b,
            })
            .collect(),
        initial_only: req
            .initial_only
            .iter()
            .map(|(n, x)| Value {
                name: n.clone(),
                value: *x,
            })
            .collect(),
        initial_state: values(&sol.initial_state),
        final_state: values(trajectory.last()),
        iterations: sol.iterations,
        residual: sol.residual,
        energy_drift: trajectory.max_energy_drift(),
        oscillator,
    };
    Ok(Simulation {
        summary,
        field,
        trajectory,
    })
}
