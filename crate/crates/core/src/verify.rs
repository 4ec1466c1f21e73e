//! Numerical checks: sampled bracket residuals, a finite-difference bracket
//! oracle, and RK4 trajectories with conservation drift.

use rand::Rng;
use serde::Serialize;

use crate::error::Result;
use crate::phasespace::{poisson, MomentumPoly};
use crate::sampling::Windows;
use crate::symexpr::{zero_test, Bindings, EvalError, ZeroReport};

/// Samples `{H, K}` with the relative-cancellation rule.
pub fn bracket_residual<R: Rng + ?Sized>(
    h: &MomentumPoly,
    k: &MomentumPoly,
    windows: &Windows,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> Result<ZeroReport> {
    let b = poisson(h, k)?;
    Ok(zero_test(&b, windows, trials, tol, rng)?)
}

fn central_difference(
    f: &MomentumPoly,
    point: &Bindings,
    var: &str,
    step: f64,
) -> Result<f64, EvalError> {
    let x = point
        .get(var)
        .ok_or_else(|| EvalError::Unbound(var.to_string()))?;
    let mut b = point.clone();
    b.set(var, x + step);
    let plus = f.eval(&b)?;
    b.set(var, x - step);
    let minus = f.eval(&b)?;
    Ok((plus - minus) / (2.0 * step))
}

/// `{H, K}` at `point` from evaluations of `H` and `K` only.
pub fn fd_bracket_oracle(
    h: &MomentumPoly,
    k: &MomentumPoly,
    point: &Bindings,
    step: f64,
) -> Result<f64, EvalError> {
    let mut acc = 0.0;
    for (q, p) in h.chart().pairs() {
        let hq = central_difference(h, point, q, step)?;
        let hp = central_difference(h, point, p, step)?;
        let kq = central_difference(k, point, q, step)?;
        let kp = central_difference(k, point, p, step)?;
        acc += hq * kp - hp * kq;
    }
    Ok(acc)
}

/// States along a fixed-step trajectory, in chart order `(q_1, p_1, q_2, p_2, ...)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Set when the run stopped early at a pole or a non-finite value.
    pub truncated: bool,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn t_end(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// A run together with the same run at half the step size.
#[derive(Debug, Clone)]
pub struct Integration {
    pub coarse: Trajectory,
    pub fine: Trajectory,
}

struct HamiltonField {
    names: Vec<String>,
    // (dH/dp_i, -dH/dq_i) interleaved to match `names`
    rhs: Vec<MomentumPoly>,
    base: Bindings,
}

impl HamiltonField {
    fn new(h: &MomentumPoly, start: &Bindings) -> Self {
        let mut names = Vec::new();
        let mut rhs = Vec::new();
        for (q, p) in h.chart().pairs() {
            names.push(q.clone());
            rhs.push(h.diff(p));
            names.push(p.clone());
            rhs.push(h.diff(q).neg());
        }
        HamiltonField {
            names,
            rhs,
            base: start.clone(),
        }
    }

    fn bind(&self, y: &[f64]) -> Bindings {
        let mut b = self.base.clone();
        for (n, v) in self.names.iter().zip(y) {
            b.set(n.clone(), *v);
        }
        b
    }

    fn eval(&self, y: &[f64]) -> Result<Vec<f64>, EvalError> {
        let b = self.bind(y);
        self.rhs.iter().map(|f| f.eval(&b)).collect()
    }

    fn initial(&self) -> Result<Vec<f64>, EvalError> {
        self.names
            .iter()
            .map(|n| {
                self.base
                    .get(n)
                    .ok_or_else(|| EvalError::Unbound(n.clone()))
            })
            .collect()
    }
}

fn axpy(y: &[f64], k: &[f64], h: f64) -> Vec<f64> {
    y.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

fn near_pole(names: &[String], y: &[f64], guard: Option<&Windows>) -> bool {
    let Some(w) = guard else { return false };
    names
        .iter()
        .zip(y)
        .any(|(n, v)| w.get(n).is_some_and(|win| win.near_pole(*v)))
}

/// Classic RK4 for `q' = dH/dp`, `p' = -dH/dq`. `start` must bind every chart
/// variable and parameter. When `guard` is given, entering a declared pole
/// neighbourhood truncates the run.
pub fn rk4(
    h: &MomentumPoly,
    start: &Bindings,
    t_end: f64,
    dt: f64,
    guard: Option<&Windows>,
) -> Result<Trajectory, EvalError> {
    let field = HamiltonField::new(h, start);
    let mut y = field.initial()?;
    let steps = (t_end / dt).round().max(0.0) as usize;
    let mut traj = Trajectory {
        dt,
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        truncated: false,
    };
    traj.times.push(0.0);
    traj.states.push(y.clone());
    for i in 0..steps {
        let stage = || -> Result<Vec<f64>, EvalError> {
            let k1 = field.eval(&y)?;
            let k2 = field.eval(&axpy(&y, &k1, dt / 2.0))?;
            let k3 = field.eval(&axpy(&y, &k2, dt / 2.0))?;
            let k4 = field.eval(&axpy(&y, &k3, dt))?;
            Ok(y.iter()
                .enumerate()
                .map(|(j, v)| v + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
                .collect())
        };
        match stage() {
            Ok(next)
                if next.iter().all(|v| v.is_finite()) && !near_pole(&field.names, &next, guard) =>
            {
                y = next;
                traj.times.push((i + 1) as f64 * dt);
                traj.states.push(y.clone());
            }
            Ok(_) | Err(EvalError::Pole(_)) | Err(EvalError::NonFinite) => {
                traj.truncated = true;
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(traj)
}

/// RK4 at `dt` and at `dt / 2`.
pub fn integrate(
    h: &MomentumPoly,
    start: &Bindings,
    t_end: f64,
    dt: f64,
    guard: Option<&Windows>,
) -> Result<Integration, EvalError> {
    Ok(Integration {
        coarse: rk4(h, start, t_end, dt, guard)?,
        fine: rk4(h, start, t_end, dt / 2.0, guard)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub name: String,
    /// `max_t |F(t) - F(0)| / max(1, |F(0)|)` at step `dt`.
    pub drift: f64,
    /// The same quantity at step `dt / 2`.
    pub drift_half_step: f64,
    pub t_end: f64,
    pub dt: f64,
    pub steps: usize,
    pub truncated: bool,
}

fn drift_along(
    f: &MomentumPoly,
    names: &[String],
    base: &Bindings,
    traj: &Trajectory,
) -> Result<f64, EvalError> {
    let mut b = base.clone();
    let mut at = |y: &[f64]| {
        for (n, v) in names.iter().zip(y) {
            b.set(n.clone(), *v);
        }
        f.eval(&b)
    };
    let f0 = at(&traj.states[0])?;
    let norm = f0.abs().max(1.0);
    let mut worst: f64 = 0.0;
    for y in &traj.states[1..] {
        worst = worst.max((at(y)? - f0).abs() / norm);
    }
    Ok(worst)
}

/// Integrates under `h` and reports the drift of each named integral.
pub fn conservation_drift(
    h: &MomentumPoly,
    integrals: &[(String, MomentumPoly)],
    start: &Bindings,
    t_end: f64,
    dt: f64,
    guard: Option<&Windows>,
) -> Result<Vec<DriftReport>, EvalError> {
    let run = integrate(h, start, t_end, dt, guard)?;
    let names: Vec<String> = h
        .chart()
        .pairs()
        .iter()
        .flat_map(|(q, p)| [q.clone(), p.clone()])
        .collect();
    integrals
        .iter()
        .map(|(name, f)| {
            Ok(DriftReport {
                name: name.clone(),
                drift: drift_along(f, &names, start, &run.coarse)?,
                drift_half_step: drift_along(f, &names, start, &run.fine)?,
                t_end: run.coarse.t_end(),
                dt,
                steps: run.coarse.steps(),
                truncated: run.coarse.truncated || run.fine.truncated,
            })
        })
        .collect()
}
