//! Dormand–Prince 5(4) integrator with continuous (dense) output.
//!
//! The stepper keeps every accepted step so that the solution can be
//! evaluated at arbitrary times afterwards. The continuous extension is the
//! classical fourth-order one of Hairer, Nørsett and Wanner.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default absolute tolerance used throughout the crate.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;
/// Default relative tolerance used throughout the crate.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { abs: DEFAULT_ABS_TOL, rel: DEFAULT_REL_TOL }
    }
}

/// Right-hand side failure. The integrator treats it as a rejected step.
#[derive(Debug, Clone, Copy)]
pub struct RhsError;

pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), RhsError>;
}

/// Wraps a closure as an [`OdeSystem`].
pub struct FnSystem<F> {
    dim: usize,
    f: F,
}

impl<F> FnSystem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> OdeSystem for FnSystem<F>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), RhsError> {
        (self.f)(t, y, dy);
        Ok(())
    }
}

pub struct OdeProblem<'a> {
    pub system: &'a dyn OdeSystem,
    pub tol: Tolerances,
    /// Upper bound on the step size; `f64::INFINITY` for none.
    pub h_max: f64,
    pub max_steps: usize,
}

impl<'a> OdeProblem<'a> {
    pub fn new(system: &'a dyn OdeSystem) -> Self {
        Self { system, tol: Tolerances::default(), h_max: f64::INFINITY, max_steps: 200_000 }
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    fn validate(&self, y0: &[f64], t0: f64, t1: f64) -> Result<()> {
        if !(self.tol.abs > 0.0 && self.tol.rel > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be strictly positive".into()));
        }
        if !(t1 > t0) {
            return Err(Error::InvalidParameter(format!("empty integration range [{t0}, {t1}]")));
        }
        if y0.len() != self.system.dim() {
            return Err(Error::InvalidParameter(format!("initial state has dimension {}, system expects {}", y0.len(), self.system.dim())));
        }
        Ok(())
    }
}

/// Piecewise quartic solution produced by [`integrate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseTrajectory {
    dim: usize,
    times: Vec<f64>,
    /// `dim` values per breakpoint.
    states: Vec<f64>,
    /// Three coefficient vectors (`3 * dim` values) per step.
    cont: Vec<f64>,
}

impl DenseTrajectory {
    fn start(dim: usize, t0: f64, y0: &[f64]) -> Self {
        Self { dim, times: vec![t0], states: y0.to_vec(), cont: Vec::new() }
    }

    /// Rebuilds a trajectory from raw arrays, e.g. when loading a cache.
    pub fn from_parts(dim: usize, times: Vec<f64>, states: Vec<f64>, cont: Vec<f64>) -> Result<Self> {
        let nb = times.len();
        if dim == 0 || nb == 0 || states.len() != nb * dim || cont.len() != (nb - 1) * 3 * dim {
            return Err(Error::InvalidParameter("inconsistent dense trajectory arrays".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("breakpoints not strictly increasing".into()));
        }
        Ok(Self { dim, times, states, cont })
    }

    pub fn parts(&self) -> (usize, &[f64], &[f64], &[f64]) {
        (self.dim, &self.times, &self.states, &self.cont)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.times
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn state_at_breakpoint(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn last_state(&self) -> &[f64] {
        self.state_at_breakpoint(self.times.len() - 1)
    }

    fn push_step(&mut self, t1: f64, y1: &[f64], r3: &[f64], r4: &[f64], r5: &[f64]) {
        self.times.push(t1);
        self.states.extend_from_slice(y1);
        self.cont.extend_from_slice(r3);
        self.cont.extend_from_slice(r4);
        self.cont.extend_from_slice(r5);
    }

    fn contains(&self, t: f64) -> bool {
        t >= self.t_start() && t <= self.t_end()
    }

    /// Index of the step containing `t` (clamped to the valid range).
    fn locate(&self, t: f64) -> usize {
        let n = self.n_steps();
        let idx = self.times.partition_point(|&x| x <= t);
        idx.saturating_sub(1).min(n.saturating_sub(1))
    }

    fn range_error(&self, t: f64) -> Error {
        Error::OutOfRange { what: "t", value: t, lo: self.t_start(), hi: self.t_end() }
    }

    /// Evaluates the full state at `t` into `out`.
    pub fn eval_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        if !self.contains(t) {
            return Err(self.range_error(t));
        }
        let n = self.dim;
        if self.n_steps() == 0 {
            out.copy_from_slice(&self.states[..n]);
            return Ok(());
        }
        let i = self.locate(t);
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        if t == ta {
            out.copy_from_slice(self.state_at_breakpoint(i));
            return Ok(());
        }
        if t == tb {
            out.copy_from_slice(self.state_at_breakpoint(i + 1));
            return Ok(());
        }
        let s = (t - ta) / (tb - ta);
        let s1 = 1.0 - s;
        let ya = self.state_at_breakpoint(i);
        let yb = self.state_at_breakpoint(i + 1);
        let c = &self.cont[i * 3 * n..(i + 1) * 3 * n];
        for k in 0..n {
            let r2 = yb[k] - ya[k];
            out[k] = ya[k] + s * (r2 + s1 * (c[k] + s * (c[n + k] + s1 * c[2 * n + k])));
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        self.eval_into(t, &mut out)?;
        Ok(out)
    }

    /// Evaluates a single component at `t`.
    pub fn eval_component(&self, t: f64, k: usize) -> Result<f64> {
        if !self.contains(t) {
            return Err(self.range_error(t));
        }
        Ok(self.component_unchecked(t, k))
    }

    fn component_unchecked(&self, t: f64, k: usize) -> f64 {
        let n = self.dim;
        if self.n_steps() == 0 {
            return self.states[k];
        }
        let i = self.locate(t);
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        let ya = self.states[i * n + k];
        let yb = self.states[(i + 1) * n + k];
        if t == ta {
            return ya;
        }
        if t == tb {
            return yb;
        }
        let s = (t - ta) / (tb - ta);
        let s1 = 1.0 - s;
        let c = &self.cont[i * 3 * n..(i + 1) * 3 * n];
        ya + s * ((yb - ya) + s1 * (c[k] + s * (c[n + k] + s1 * c[2 * n + k])))
    }
}

// Dormand–Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Returned by the step monitor of [`integrate_until`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepControl {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Reached the requested end time.
    Completed,
    /// The monitor asked to stop after an accepted step.
    Stopped,
}

/// Failure carrying the part of the solution that was computed.
#[derive(Debug, Clone)]
pub struct IntegrationFailure {
    pub last_t: f64,
    pub reason: String,
    pub partial: DenseTrajectory,
}

impl From<IntegrationFailure> for Error {
    fn from(f: IntegrationFailure) -> Self {
        Error::Integration { last_t: f.last_t, reason: f.reason }
    }
}

/// Integrates `problem` from `t0` to `t1`.
pub fn integrate(problem: &OdeProblem<'_>, y0: &[f64], t0: f64, t1: f64) -> Result<DenseTrajectory> {
    problem.validate(y0, t0, t1)?;
    let (traj, _) = integrate_until(problem, y0, t0, t1, |_, _| StepControl::Continue)?;
    Ok(traj)
}

/// Integrates like [`integrate`], calling `monitor` after every accepted step.
///
/// The monitor sees the state at the end of the step and may stop the
/// integration there; the returned trajectory then ends at that time.
pub fn integrate_until<M>(
    problem: &OdeProblem<'_>,
    y0: &[f64],
    t0: f64,
    t1: f64,
    mut monitor: M,
) -> Result<(DenseTrajectory, Termination), IntegrationFailure>
where
    M: FnMut(f64, &[f64]) -> StepControl,
{
    let n = y0.len();
    let sys = problem.system;
    let tol = problem.tol;
    let mut traj = DenseTrajectory::start(n, t0, y0);
    let fail = |traj: DenseTrajectory, t: f64, reason: &str| IntegrationFailure { last_t: t, reason: reason.to_string(), partial: traj };
    if let Err(e) = problem.validate(y0, t0, t1) {
        return Err(fail(traj, t0, &e.to_string()));
    }

    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut r3 = vec![0.0; n];
    let mut r4 = vec![0.0; n];
    let mut r5 = vec![0.0; n];

    if sys.rhs(t0, &y, &mut k1).is_err() {
        return Err(fail(traj, t0, "right-hand side undefined at the initial state"));
    }

    let span = t1 - t0;
    let mut t = t0;
    let mut h = initial_step(&y, &k1, tol, span).min(problem.h_max);
    let mut steps = 0usize;
    let mut rejected_last = false;

    loop {
        if steps >= problem.max_steps {
            return Err(fail(traj, t, "maximum number of steps exceeded"));
        }
        let h_min = 1e-14 * t.abs().max(span).max(1.0);
        if h < h_min {
            return Err(fail(traj, t, "step size underflow"));
        }
        let last = t + h >= t1;
        if last {
            h = t1 - t;
        }

        let stage_ok = (|| {
            for i in 0..n {
                ytmp[i] = y[i] + h * A21 * k1[i];
            }
            sys.rhs(t + C2 * h, &ytmp, &mut k2)?;
            for i in 0..n {
                ytmp[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            sys.rhs(t + C3 * h, &ytmp, &mut k3)?;
            for i in 0..n {
                ytmp[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            sys.rhs(t + C4 * h, &ytmp, &mut k4)?;
            for i in 0..n {
                ytmp[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            sys.rhs(t + C5 * h, &ytmp, &mut k5)?;
            for i in 0..n {
                ytmp[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            sys.rhs(t + h, &ytmp, &mut k6)?;
            for i in 0..n {
                ynew[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            sys.rhs(t + h, &ynew, &mut k7)?;
            Ok::<(), RhsError>(())
        })();

        steps += 1;
        if stage_ok.is_err() {
            h *= 0.25;
            rejected_last = true;
            continue;
        }

        let mut err2 = 0.0;
        for i in 0..n {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.abs + tol.rel * y[i].abs().max(ynew[i].abs());
            err2 += (e / sc) * (e / sc);
        }
        let err = (err2 / n as f64).sqrt();
        if !err.is_finite() {
            h *= 0.25;
            rejected_last = true;
            continue;
        }

        if err <= 1.0 {
            for i in 0..n {
                let r2 = ynew[i] - y[i];
                r3[i] = h * k1[i] - r2;
                r4[i] = r2 - h * k7[i] - r3[i];
                r5[i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            let t_new = if last { t1 } else { t + h };
            traj.push_step(t_new, &ynew, &r3, &r4, &r5);
            t = t_new;
            std::mem::swap(&mut y, &mut ynew);
            std::mem::swap(&mut k1, &mut k7);
            if last {
                return Ok((traj, Termination::Completed));
            }
            if monitor(t, &y) == StepControl::Stop {
                return Ok((traj, Termination::Stopped));
            }
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            if rejected_last {
                fac = fac.min(1.0);
            }
            h = (h * fac.clamp(0.2, 10.0)).min(problem.h_max);
            rejected_last = false;
        } else {
            let fac = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            h *= fac;
            rejected_last = true;
        }
    }
}

fn initial_step(y: &[f64], f: &[f64], tol: Tolerances, span: f64) -> f64 {
    let n = y.len() as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..y.len() {
        let sc = tol.abs + tol.rel * y[i].abs();
        d0 += (y[i] / sc).powi(2);
        d1 += (f[i] / sc).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(0.1 * span).max(1e-12 * span)
}
