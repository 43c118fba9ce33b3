//! Fixed-step integration of Hamilton's equations with conservation
//! monitoring.

use std::fmt::Write as _;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::coordinates::{chart_functions, hamiltonian_polar_integrable, MomentumScale, Radial, SpaceSignature};
use crate::error::{Error, Result};
use crate::function::{PhaseFunction, PhasePoint};

/// Fixed-point tolerance on the stage update, relative to `max(1, |x|)`.
pub const SOLVER_TOLERANCE: f64 = 1e-13;
pub const MAX_ITERATIONS: usize = 50;
/// A step that has not reached this residual after [`MAX_ITERATIONS`] is
/// reported as non-convergent; below it the last iterate is accepted
/// (round-off can stall a contraction just above [`SOLVER_TOLERANCE`]).
pub const ACCEPT_RESIDUAL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "implicit-midpoint")]
    ImplicitMidpoint,
    #[serde(rename = "gauss4")]
    Gauss4,
    #[serde(rename = "rk4-check")]
    Rk4Check,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::ImplicitMidpoint => "implicit-midpoint",
            Method::Gauss4 => "gauss4",
            Method::Rk4Check => "rk4-check",
        }
    }

    pub fn is_symplectic(self) -> bool {
        !matches!(self, Method::Rk4Check)
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "implicit-midpoint" | "midpoint" => Ok(Method::ImplicitMidpoint),
            "gauss4" => Ok(Method::Gauss4),
            "rk4-check" | "rk4" => Ok(Method::Rk4Check),
            _ => Err(Error::InvalidArgument(format!("unknown method '{s}' (implicit-midpoint, gauss4, rk4-check)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Options {
    pub method: Method,
    pub t_end: f64,
    pub dt: f64,
    /// Store every k-th state; the first and last are always stored.
    pub keep_every: usize,
}

impl Options {
    pub fn new(t_end: f64, dt: f64) -> Self {
        Options { method: Method::ImplicitMidpoint, t_end, dt, keep_every: 1 }
    }

    pub fn method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn keep_every(mut self, k: usize) -> Self {
        self.keep_every = k;
        self
    }

    /// `(number of steps, uniform step)` covering `[0, t_end]`.
    pub fn grid(&self) -> (usize, f64) {
        let steps = ((self.t_end / self.dt).round() as usize).max(1);
        (steps, self.t_end / steps as f64)
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive (got {})", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_end must be positive (got {})", self.t_end)));
        }
        if self.keep_every == 0 {
            return Err(Error::InvalidArgument("keep_every must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub hamiltonian: String,
    pub method: Method,
    pub step: f64,
    pub times: Vec<f64>,
    pub states: Vec<PhasePoint>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &PhasePoint {
        self.states.last().expect("a trajectory holds at least its initial state")
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }
}

/// Integration stopped early; `partial` holds every state reached.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{error}")]
pub struct Interrupted {
    pub error: Error,
    pub partial: Box<Trajectory>,
}

impl From<Interrupted> for Error {
    fn from(e: Interrupted) -> Self {
        e.error
    }
}

/// `(q̇, ṗ) = (∂H/∂p, −∂H/∂q)` with exact gradients.
pub fn hamilton_rhs(h: &PhaseFunction, x: &PhasePoint) -> Result<PhasePoint> {
    if h.arity() != x.dim() {
        return Err(Error::ArityMismatch { expected: h.arity(), found: x.dim() });
    }
    let v = rhs_flat(h, &x.flat());
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite { what: format!("vector field of {}", h.label()), point: x.flat() });
    }
    PhasePoint::from_flat(&v)
}

fn rhs_flat(h: &PhaseFunction, x: &[f64]) -> Vec<f64> {
    let n = x.len() / 2;
    let g = h.as_diff().gradient(x);
    let mut v = Vec::with_capacity(2 * n);
    v.extend_from_slice(&g[n..]);
    v.extend(g[..n].iter().map(|d| -d));
    v
}

fn axpy(x: &[f64], h: f64, k: &[f64]) -> Vec<f64> {
    x.iter().zip(k).map(|(a, b)| a + h * b).collect()
}

fn change(a: &[f64], b: &[f64], h: f64, x: &[f64]) -> f64 {
    a.iter().zip(b).zip(x).map(|((u, v), s)| h * (u - v).abs() / s.abs().max(1.0)).fold(0.0, f64::max)
}

struct Stepper<'a> {
    h: &'a PhaseFunction,
    method: Method,
    step: f64,
}

impl Stepper<'_> {
    fn advance(&self, x: &[f64], t: f64) -> Result<Vec<f64>> {
        let dt = self.step;
        let out = match self.method {
            Method::Rk4Check => {
                let k1 = rhs_flat(self.h, x);
                let k2 = rhs_flat(self.h, &axpy(x, 0.5 * dt, &k1));
                let k3 = rhs_flat(self.h, &axpy(x, 0.5 * dt, &k2));
                let k4 = rhs_flat(self.h, &axpy(x, dt, &k3));
                (0..x.len()).map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
            }
            Method::ImplicitMidpoint => {
                let mut k = rhs_flat(self.h, x);
                let mut residual = f64::INFINITY;
                for _ in 0..MAX_ITERATIONS {
                    let next = rhs_flat(self.h, &axpy(x, 0.5 * dt, &k));
                    residual = change(&next, &k, dt, x);
                    k = next;
                    if !(residual >= SOLVER_TOLERANCE) {
                        break;
                    }
                }
                self.converged(residual, t)?;
                axpy(x, dt, &k)
            }
            Method::Gauss4 => {
                let r = 3f64.sqrt() / 6.0;
                let a = [[0.25, 0.25 - r], [0.25 + r, 0.25]];
                let f0 = rhs_flat(self.h, x);
                let mut k = [f0.clone(), f0];
                let mut residual = f64::INFINITY;
                for _ in 0..MAX_ITERATIONS {
                    let next: [Vec<f64>; 2] = std::array::from_fn(|i| {
                        let y: Vec<f64> =
                            (0..x.len()).map(|c| x[c] + dt * (a[i][0] * k[0][c] + a[i][1] * k[1][c])).collect();
                        rhs_flat(self.h, &y)
                    });
                    residual = change(&next[0], &k[0], dt, x).max(change(&next[1], &k[1], dt, x));
                    k = next;
                    if !(residual >= SOLVER_TOLERANCE) {
                        break;
                    }
                }
                self.converged(residual, t)?;
                (0..x.len()).map(|c| x[c] + 0.5 * dt * (k[0][c] + k[1][c])).collect()
            }
        };
        Ok(out)
    }

    fn converged(&self, residual: f64, t: f64) -> Result<()> {
        if residual.is_nan() {
            return Err(Error::DomainExit { time: t, detail: "non-finite vector field".into() });
        }
        if residual > ACCEPT_RESIDUAL {
            return Err(Error::NonConvergence { time: t, residual });
        }
        Ok(())
    }
}

/// Integrates with `opts` from `x0`, rejecting states for which `domain`
/// fails.
pub fn integrate_in<D>(
    h: &PhaseFunction,
    x0: &PhasePoint,
    opts: &Options,
    domain: D,
) -> std::result::Result<Trajectory, Interrupted>
where
    D: Fn(&PhasePoint) -> Result<()>,
{
    let mut traj = Trajectory {
        hamiltonian: h.label().to_string(),
        method: opts.method,
        step: opts.dt,
        times: vec![0.0],
        states: vec![x0.clone()],
    };
    let fail = |error: Error, traj: Trajectory| Err(Interrupted { error, partial: Box::new(traj) });
    if let Err(e) = opts.validate() {
        return fail(e, traj);
    }
    if h.arity() != x0.dim() {
        return fail(Error::ArityMismatch { expected: h.arity(), found: x0.dim() }, traj);
    }
    let (steps, step) = opts.grid();
    traj.step = step;
    let check = |x: &PhasePoint, t: f64| -> Result<()> {
        if x.q.iter().chain(&x.p).any(|v| !v.is_finite()) {
            return Err(Error::DomainExit { time: t, detail: "non-finite state".into() });
        }
        domain(x).map_err(|e| Error::DomainExit { time: t, detail: e.to_string() })?;
        if rhs_flat(h, &x.flat()).iter().any(|v| !v.is_finite()) {
            return Err(Error::DomainExit { time: t, detail: format!("{} is singular", h.label()) });
        }
        Ok(())
    };
    if let Err(e) = check(x0, 0.0) {
        return fail(e, traj);
    }
    let stepper = Stepper { h, method: opts.method, step };
    let mut x = x0.flat();
    for k in 1..=steps {
        let t_prev = (k - 1) as f64 * step;
        let t = if k == steps { opts.t_end } else { k as f64 * step };
        let next = match stepper.advance(&x, t_prev) {
            Ok(v) => v,
            Err(e) => return fail(e, traj),
        };
        if next.iter().any(|v| !v.is_finite()) {
            return fail(Error::DomainExit { time: t, detail: "non-finite state".into() }, traj);
        }
        let state = PhasePoint { q: next[..x0.dim()].to_vec(), p: next[x0.dim()..].to_vec() };
        if let Err(e) = check(&state, t) {
            return fail(e, traj);
        }
        if k % opts.keep_every == 0 || k == steps {
            traj.times.push(t);
            traj.states.push(state);
        }
        x = next;
    }
    Ok(traj)
}

pub fn integrate(h: &PhaseFunction, x0: &PhasePoint, opts: &Options) -> std::result::Result<Trajectory, Interrupted> {
    integrate_in(h, x0, opts, |_| Ok(()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Drift {
    pub label: String,
    pub initial: f64,
    /// `max_t |f(x(t)) − f(x(0))| / max(1, |f(x(0))|)`
    pub max_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConservationReport {
    pub drifts: Vec<Drift>,
}

impl ConservationReport {
    pub fn max_drift(&self) -> f64 {
        self.drifts.iter().map(|d| d.max_drift).fold(0.0, f64::max)
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.drifts.iter().find(|d| d.label == label).map(|d| d.max_drift)
    }
}

/// Relative drift `|f(x) − f(x₀)|/|f(x₀)|` along the trajectory, one value
/// per stored state; absolute when `f(x₀) = 0`.
pub fn drift_series(traj: &Trajectory, f: &PhaseFunction) -> Result<Vec<f64>> {
    if f.arity() != traj.dim() {
        return Err(Error::ArityMismatch { expected: traj.dim(), found: f.arity() });
    }
    let f0 = f.value(&traj.states[0]);
    let scale = if f0 != 0.0 { f0.abs() } else { 1.0 };
    Ok(traj.states.iter().map(|x| (f.value(x) - f0).abs() / scale).collect())
}

pub fn conservation_report(traj: &Trajectory, funcs: &[(String, PhaseFunction)]) -> Result<ConservationReport> {
    let drifts = funcs
        .iter()
        .map(|(label, f)| {
            let series = drift_series(traj, f)?;
            Ok(Drift {
                label: label.clone(),
                initial: f.value(&traj.states[0]),
                max_drift: series.iter().copied().fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) }),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConservationReport { drifts })
}

fn csv_number(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with header `t, q1..qN, p1..pN, <monitor names>`; numbers carry 17
/// significant digits.
pub fn write_csv<W: Write>(out: &mut W, traj: &Trajectory, monitors: &[(String, PhaseFunction)]) -> Result<()> {
    let n = traj.dim();
    let mut header = String::from("t");
    for i in 1..=n {
        let _ = write!(header, ",q{i}");
    }
    for i in 1..=n {
        let _ = write!(header, ",p{i}");
    }
    for (name, f) in monitors {
        if f.arity() != n {
            return Err(Error::ArityMismatch { expected: n, found: f.arity() });
        }
        let _ = write!(header, ",{name}");
    }
    let io = |e: std::io::Error| Error::InvalidArgument(format!("write failed: {e}"));
    writeln!(out, "{header}").map_err(io)?;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        let mut row = csv_number(*t);
        for v in x.q.iter().chain(&x.p) {
            row.push(',');
            row.push_str(&csv_number(*v));
        }
        for (_, f) in monitors {
            row.push(',');
            row.push_str(&csv_number(f.value(x)));
        }
        writeln!(out, "{row}").map_err(io)?;
    }
    Ok(())
}

/// Worst mismatch between the polar velocity of a Cartesian `H^I`
/// trajectory and twice the vector field of the polar Hamiltonian.
///
/// The polar velocity is `∇F(x)·ẋ` for each chart coordinate `F`, with `ẋ`
/// the Cartesian vector field at the stored state. Residuals are relative to
/// `max(1, |velocity|)`.
pub fn cross_chart_residual(
    traj: &Trajectory,
    cartesian: &PhaseFunction,
    sig: SpaceSignature,
    every: usize,
) -> Result<f64> {
    if traj.dim() != 3 {
        return Err(Error::ArityMismatch { expected: 3, found: traj.dim() });
    }
    let chart = chart_functions(sig, Radial::Rho, MomentumScale::Canonical);
    let polar = hamiltonian_polar_integrable(sig).hamiltonian;
    let mut worst: f64 = 0.0;
    for x in traj.states.iter().step_by(every.max(1)) {
        let v = hamilton_rhs(cartesian, x)?.flat();
        let y: Vec<f64> = chart.iter().map(|f| f.value(x)).collect();
        let field = hamilton_rhs(&polar, &PhasePoint::from_flat(&y)?)?.flat();
        for (f, target) in chart.iter().zip(&field) {
            let grad = f.as_diff().gradient(&x.flat());
            let vel: f64 = grad.iter().zip(&v).map(|(a, b)| a * b).sum();
            worst = worst.max((vel - 2.0 * target).abs() / vel.abs().max(1.0));
        }
    }
    Ok(worst)
}
