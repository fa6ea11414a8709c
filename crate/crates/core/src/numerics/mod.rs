//! Numeric realization of the map ι: the reduced Hamilton equations, a
//! fixed-step RK4 integrator and a shooting solver for two-point data.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num::complex::Complex64;

use crate::chart::{fmt_float, FloatPoly};
use crate::error::{Error, Result};
use crate::symkernel::{SymbolTable, Var};

/// `(Q, P, t) ↦ (∂H/∂P, −∂H/∂Q)` with its Jacobian, compiled from a
/// polynomial Hamiltonian.
#[derive(Clone, Debug)]
pub struct ReducedField {
    q: Vec<Var>,
    p: Vec<Var>,
    time: Option<Var>,
    hamiltonian: FloatPoly,
    rhs: Vec<FloatPoly>,
    jacobian: Vec<Vec<FloatPoly>>,
}

pub fn compile_field(
    h: &FloatPoly,
    q: &[Var],
    p: &[Var],
    time: Option<Var>,
    table: &SymbolTable,
) -> Result<ReducedField> {
    if q.len() != p.len() {
        return Err(Error::Input("unequal numbers of Q and P".into()));
    }
    if let Some(v) = h
        .vars()
        .into_iter()
        .find(|v| !q.contains(v) && !p.contains(v) && Some(*v) != time)
    {
        return Err(Error::Precondition(format!(
            "reduced Hamiltonian still contains `{}`",
            table.name(v)
        )));
    }
    let z: Vec<Var> = q.iter().chain(p).copied().collect();
    let rhs: Vec<FloatPoly> = p
        .iter()
        .map(|&v| h.diff(v))
        .chain(q.iter().map(|&v| h.diff(v).scale(-1.0)))
        .collect();
    let jacobian = rhs
        .iter()
        .map(|f| z.iter().map(|&v| f.diff(v)).collect())
        .collect();
    Ok(ReducedField {
        q: q.to_vec(),
        p: p.to_vec(),
        time,
        hamiltonian: h.clone(),
        rhs,
        jacobian,
    })
}

impl ReducedField {
    /// Number of `(Q, P)` pairs.
    pub fn pairs(&self) -> usize {
        self.q.len()
    }

    pub fn dim(&self) -> usize {
        2 * self.q.len()
    }

    pub fn positions(&self) -> &[Var] {
        &self.q
    }

    pub fn momenta(&self) -> &[Var] {
        &self.p
    }

    fn lookup<'a>(&'a self, z: &'a [f64], t: f64) -> impl Fn(Var) -> f64 + 'a {
        move |v| {
            if Some(v) == self.time {
                return t;
            }
            let i = self.q.iter().chain(&self.p).position(|x| *x == v).unwrap();
            z[i]
        }
    }

    pub fn eval(&self, z: &[f64], t: f64) -> Vec<f64> {
        let f = self.lookup(z, t);
        self.rhs.iter().map(|r| r.eval(&f)).collect()
    }

    pub fn jacobian(&self, z: &[f64], t: f64) -> Vec<Vec<f64>> {
        let f = self.lookup(z, t);
        self.jacobian
            .iter()
            .map(|row| row.iter().map(|r| r.eval(&f)).collect())
            .collect()
    }

    pub fn energy(&self, z: &[f64], t: f64) -> f64 {
        self.hamiltonian.eval(&self.lookup(z, t))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub energy: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one state")
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energy[0];
        self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }

    /// Columns `t, Q…, P…, H`.
    pub fn write_csv<W: Write>(&self, w: W, field: &ReducedField, table: &SymbolTable) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        header.extend(field.q.iter().chain(&field.p).map(|&v| table.name(v).to_string()));
        header.push("H".into());
        let io = |e: csv::Error| Error::Input(format!("cannot write CSV: {e}"));
        out.write_record(&header).map_err(io)?;
        for ((t, z), h) in self.times.iter().zip(&self.states).zip(&self.energy) {
            let mut rec = vec![fmt_float(*t)];
            rec.extend(z.iter().map(|x| fmt_float(*x)));
            rec.push(fmt_float(*h));
            out.write_record(&rec).map_err(io)?;
        }
        out.flush().map_err(|e| Error::Input(format!("cannot write CSV: {e}")))?;
        Ok(())
    }
}

fn steps(t1: f64, t2: f64, step: f64) -> Result<(usize, f64)> {
    if !(step > 0.0) || !(t2 > t1) || !step.is_finite() || !t2.is_finite() || !t1.is_finite() {
        return Err(Error::Input("integration needs step > 0 and t2 > t1".into()));
    }
    let n = ((t2 - t1) / step - 1e-9).ceil().max(1.0) as usize;
    Ok((n, (t2 - t1) / n as f64))
}

fn rk4_step(f: &dyn Fn(&[f64], f64) -> Vec<f64>, z: &[f64], t: f64, h: f64) -> Vec<f64> {
    let axpy = |a: &[f64], k: &[f64], s: f64| a.iter().zip(k).map(|(x, y)| x + s * y).collect::<Vec<_>>();
    let k1 = f(z, t);
    let k2 = f(&axpy(z, &k1, h / 2.0), t + h / 2.0);
    let k3 = f(&axpy(z, &k2, h / 2.0), t + h / 2.0);
    let k4 = f(&axpy(z, &k3, h), t + h);
    (0..z.len())
        .map(|i| z[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Classical RK4 on a uniform grid whose last node is exactly `t2`.
pub fn integrate(field: &ReducedField, init: &[f64], t1: f64, t2: f64, step: f64) -> Result<Trajectory> {
    if init.len() != field.dim() {
        return Err(Error::Input(format!(
            "initial state has {} entries, field has dimension {}",
            init.len(),
            field.dim()
        )));
    }
    let (n, h) = steps(t1, t2, step)?;
    let f = |z: &[f64], t: f64| field.eval(z, t);
    let mut z = init.to_vec();
    let mut traj = Trajectory {
        times: vec![t1],
        states: vec![z.clone()],
        energy: vec![field.energy(&z, t1)],
    };
    for k in 1..=n {
        let t0 = t1 + (k - 1) as f64 * h;
        z = rk4_step(&f, &z, t0, h);
        if z.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("non-finite state at t = {}", t0 + h)));
        }
        let t = if k == n { t2 } else { t1 + k as f64 * h };
        traj.times.push(t);
        traj.energy.push(field.energy(&z, t));
        traj.states.push(z.clone());
    }
    Ok(traj)
}

/// Final state and `∂z(t2)/∂P(t1)` from the tangent equations.
fn shoot(field: &ReducedField, init: &[f64], t1: f64, t2: f64, step: f64) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let d = field.dim();
    let m = field.pairs();
    let (n, h) = steps(t1, t2, step)?;
    let f = |y: &[f64], t: f64| {
        let z = &y[..d];
        let mut out = field.eval(z, t);
        let jac = field.jacobian(z, t);
        for c in 0..m {
            for r in 0..d {
                out.push((0..d).map(|k| jac[r][k] * y[d + c * d + k]).sum());
            }
        }
        out
    };
    let mut y = init.to_vec();
    for c in 0..m {
        for r in 0..d {
            y.push(if r == m + c { 1.0 } else { 0.0 });
        }
    }
    for k in 0..n {
        y = rk4_step(&f, &y, t1 + k as f64 * h, h);
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite state while shooting".into()));
        }
    }
    let sens = DMatrix::from_fn(m, m, |r, c| y[d + c * d + r]);
    Ok((y[..d].to_vec(), sens))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IotaSolution {
    /// Reconstructed state `(Q, P)` at `t1`.
    pub initial_state: Vec<f64>,
    pub final_state: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

pub const IOTA_TOLERANCE: f64 = 1e-10;
pub const IOTA_MAX_ITERATIONS: usize = 50;
pub const SINGULAR_DETERMINANT: f64 = 1e-9;

/// Newton shooting on `P(t1) ↦ Q(t2)` for the boundary data
/// `Q(t1) = q_start`, `Q(t2) = q_end`.
pub fn solve_iota(
    field: &ReducedField,
    t1: f64,
    t2: f64,
    q_start: &[f64],
    q_end: &[f64],
    step: f64,
) -> Result<IotaSolution> {
    let m = field.pairs();
    if q_start.len() != m || q_end.len() != m {
        return Err(Error::Input(format!("need {m} boundary values at each end")));
    }
    let mut p0 = vec![0.0; m];
    for it in 1..=IOTA_MAX_ITERATIONS {
        let init: Vec<f64> = q_start.iter().chain(&p0).copied().collect();
        let (end, sens) = shoot(field, &init, t1, t2, step)?;
        let res = DVector::from_fn(m, |i, _| end[i] - q_end[i]);
        let norm = res.amax();
        if norm < IOTA_TOLERANCE {
            return Ok(IotaSolution {
                initial_state: init,
                final_state: end,
                iterations: it - 1,
                residual: norm,
            });
        }
        if sens.determinant().abs() < SINGULAR_DETERMINANT {
            return Err(Error::Numerical(format!(
                "shooting Jacobian is singular on [{}, {}]: the boundary data do not determine the integral constants",
                fmt_float(t1),
                fmt_float(t2)
            )));
        }
        let dp = sens
            .lu()
            .solve(&res)
            .ok_or_else(|| Error::Numerical("shooting Jacobian is singular".into()))?;
        for i in 0..m {
            p0[i] -= dp[i];
        }
    }
    Err(Error::Numerical(format!(
        "shooting did not converge in {IOTA_MAX_ITERATIONS} iterations"
    )))
}

/// `A`, `B` of `Q(t) = A e^{it} + B e^{-it}` through `Q(t) = q`,
/// `dQ/dt(t) = v`.
pub fn oscillator_constants(t: f64, q: f64, v: f64) -> (Complex64, Complex64) {
    let a = Complex64::new(q, -v) * Complex64::from_polar(0.5, -t);
    let b = Complex64::new(q, v) * Complex64::from_polar(0.5, t);
    (a, b)
}

/// Whether `h` is `αQ² + βP²` with `4αβ = 1`, a unit-frequency oscillator.
pub fn is_unit_oscillator(h: &FloatPoly, q: Var, p: Var) -> bool {
    let qq = FloatPoly::var(q).pow(2);
    let pp = FloatPoly::var(p).pow(2);
    let alpha = h.coefficient(qq.terms().next().unwrap().0);
    let beta = h.coefficient(pp.terms().next().unwrap().0);
    let rest = h.sub(&qq.scale(alpha)).sub(&pp.scale(beta));
    alpha > 0.0 && beta > 0.0 && (4.0 * alpha * beta - 1.0).abs() < 1e-12 && rest.cleaned(1e-12).is_zero()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symkernel::{parse_expr, SymbolKind};
    use std::f64::consts::PI;

    fn oscillator() -> (ReducedField, SymbolTable) {
        let mut t = SymbolTable::new();
        let q = t.add("Q", SymbolKind::Parameter).unwrap();
        let p = t.add("P", SymbolKind::Parameter).unwrap();
        let h = parse_expr("P^2/2 + Q^2/2", &t).unwrap();
        let f = compile_field(&FloatPoly::from_expr(&h).unwrap(), &[q], &[p], None, &t).unwrap();
        (f, t)
    }

    #[test]
    fn oscillator_field_is_p_minus_q() {
        let (f, _) = oscillator();
        assert_eq!(f.eval(&[2.0, 3.0], 0.0), vec![3.0, -2.0]);
    }

    #[test]
    fn stray_symbol_is_rejected() {
        let mut t = SymbolTable::new();
        let q = t.add("Q", SymbolKind::Parameter).unwrap();
        let p = t.add("P", SymbolKind::Parameter).unwrap();
        t.add("zeta1", SymbolKind::Parameter).unwrap();
        let h = parse_expr("P^2/2 + zeta1*Q", &t).unwrap();
        let err = compile_field(&FloatPoly::from_expr(&h).unwrap(), &[q], &[p], None, &t).unwrap_err();
        assert!(err.to_string().contains("zeta1"));
    }

    #[test]
    fn full_period_and_quarter_period() {
        let (f, _) = oscillator();
        let tr = integrate(&f, &[1.0, 0.0], 0.0, 2.0 * PI, 1e-3).unwrap();
        assert_eq!(*tr.times.last().unwrap(), 2.0 * PI);
        assert!((tr.last()[0] - 1.0).abs() < 1e-8);
        let tr = integrate(&f, &[1.0, 0.0], 0.0, PI / 2.0, 1e-3).unwrap();
        assert!(tr.last()[0].abs() < 1e-8 && (tr.last()[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_field_is_constant() {
        let mut t = SymbolTable::new();
        let q = t.add("Q", SymbolKind::Parameter).unwrap();
        let p = t.add("P", SymbolKind::Parameter).unwrap();
        let f = compile_field(&FloatPoly::constant(3.0), &[q], &[p], None, &t).unwrap();
        let tr = integrate(&f, &[0.3, -0.7], 0.0, 1.0, 0.1).unwrap();
        assert!(tr.states.iter().all(|s| s == &vec![0.3, -0.7]));
    }

    #[test]
    fn iota_zero_data_gives_null_trajectory() {
        let (f, _) = oscillator();
        let s = solve_iota(&f, 0.0, 1.0, &[0.0], &[0.0], 1e-3).unwrap();
        assert_eq!(s.initial_state, vec![0.0, 0.0]);
    }

    #[test]
    fn iota_resonance_is_rejected() {
        let (f, _) = oscillator();
        let err = solve_iota(&f, 0.0, PI, &[1.0], &[0.5], 1e-3).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let (f, t) = oscillator();
        let tr = integrate(&f, &[1.0, 0.0], 0.0, 0.2, 0.1).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, &f, &t).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,Q,P,H\n0,1,0,0.5\n"));
        assert_eq!(s.lines().count(), 4);
    }
}
