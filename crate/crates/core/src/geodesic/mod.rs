//! Geodesic shooting with the Jacobi scalar F integrated alongside, and a
//! two-point distance oracle built on a fan of traces.

mod oracle;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{first_zero, integrate_until, DenseTrajectory, OdeProblem, OdeSystem, RhsError, StepControl, Termination, Tolerances};
use crate::surface::{axpy, cross, dot, scale, BasePoint, Chart, LocalGeometry, ParametricSurface, Vec3, SINGULAR_BAND};

pub use oracle::{geodesic_distance, DistanceOracle, DistanceResult, Hit, OracleOptions};

/// State layout: (u, v, u̇, v̇, F, Ḟ, ∫F dt).
pub const STATE_DIM: usize = 7;
pub const IDX_F: usize = 4;
pub const IDX_FDOT: usize = 5;
pub const IDX_AREA: usize = 6;

/// Chart quality below which the integration moves to a better chart.
pub const SWITCH_QUALITY: f64 = 0.35;

/// Smallest time searched for a conjugate point.
const CONJUGATE_T_MIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShootOptions {
    pub tol: Tolerances,
    pub switch_quality: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self { tol: Tolerances::default(), switch_quality: SWITCH_QUALITY }
    }
}

struct GeodesicSystem<'a> {
    chart: &'a dyn Chart,
    orientation: f64,
}

impl OdeSystem for GeodesicSystem<'_> {
    fn dim(&self) -> usize {
        STATE_DIM
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<(), RhsError> {
        let (u, v) = (y[0], y[1]);
        if !(self.chart.quality(u, v) >= SINGULAR_BAND) {
            return Err(RhsError);
        }
        let geo = LocalGeometry::from_jet(self.chart.jet(u, v), self.orientation);
        let (du, dv) = (y[2], y[3]);
        let ch = geo.christoffel;
        dy[0] = du;
        dy[1] = dv;
        dy[2] = -(ch.u[0] * du * du + 2.0 * ch.u[1] * du * dv + ch.u[2] * dv * dv);
        dy[3] = -(ch.v[0] * du * du + 2.0 * ch.v[1] * du * dv + ch.v[2] * dv * dv);
        dy[4] = y[5];
        dy[5] = -geo.gauss * y[4];
        dy[6] = y[4];
        if dy.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(RhsError)
        }
    }
}

/// One chart-local piece of a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSegment {
    pub chart: usize,
    pub traj: DenseTrajectory,
}

/// Frame and Jacobi data at one time of a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub t: f64,
    pub chart: usize,
    pub uv: [f64; 2],
    pub pos: Vec3,
    /// Unit tangent γ′.
    pub tangent: Vec3,
    /// N × γ′; ∂γ/∂θ = F · e_perp.
    pub e_perp: Vec3,
    pub normal: Vec3,
    pub f: f64,
    pub fdot: f64,
    /// ∫₀ᵗ F.
    pub area: f64,
}

/// Geodesic γ_θ from a base point with its Jacobi scalar.
#[derive(Debug, Clone)]
pub struct GeodesicTrace {
    pub base: BasePoint,
    pub theta: f64,
    pub segments: Vec<TraceSegment>,
    pub t_max: f64,
    pub conjugate_time: Option<f64>,
}

/// Shooting failure together with the part of the trace that was computed.
#[derive(Debug, Clone)]
pub struct ShootError {
    pub error: Error,
    pub partial: GeodesicTrace,
}

impl From<ShootError> for Error {
    fn from(e: ShootError) -> Self {
        e.error
    }
}

fn convert_state(surface: &ParametricSurface, from: usize, y: &[f64]) -> Option<(usize, [f64; STATE_DIM])> {
    let jet = surface.chart(from).jet(y[0], y[1]);
    let vel = axpy(y[2], jet.xu, scale(y[3], jet.xv));
    let (c, u, v, q) = surface.best_chart(jet.x)?;
    if c == from || q < SINGULAR_BAND {
        return None;
    }
    let geo = LocalGeometry::from_jet(surface.chart(c).jet(u, v), surface.chart(c).orientation());
    let w = geo.metric.solve([dot(vel, geo.jet.xu), dot(vel, geo.jet.xv)]);
    let mut out = [0.0; STATE_DIM];
    out[0] = u;
    out[1] = v;
    out[2] = w[0];
    out[3] = w[1];
    out[4..].copy_from_slice(&y[4..]);
    Some((c, out))
}

/// Shoots γ_θ with default options.
pub fn shoot(p: &BasePoint, theta: f64, t_max: f64) -> Result<GeodesicTrace> {
    shoot_with(p, theta, t_max, &ShootOptions::default()).map_err(Error::from)
}

/// Shoots γ_θ on [0, t_max], switching charts when the current one degrades.
pub fn shoot_with(p: &BasePoint, theta: f64, t_max: f64, opts: &ShootOptions) -> Result<GeodesicTrace, ShootError> {
    let surface = &p.surface;
    let mut trace = GeodesicTrace { base: p.clone(), theta, segments: Vec::new(), t_max: 0.0, conjugate_time: None };
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(ShootError { error: Error::InvalidParameter(format!("t_max must be positive, got {t_max}")), partial: trace });
    }
    let (dir, _) = p.direction(theta);
    let mut chart = p.chart;
    let mut y = vec![p.u, p.v, dir[0], dir[1], 0.0, 1.0, 0.0];
    let mut t = 0.0;
    let mut switches = 0usize;
    let mut threshold = opts.switch_quality;
    loop {
        let c = surface.chart(chart);
        let sys = GeodesicSystem { chart: c, orientation: c.orientation() };
        let prob = OdeProblem::new(&sys).with_tolerances(opts.tol);
        let res =
            integrate_until(&prob, &y, t, t_max, |_, s| if c.quality(s[0], s[1]) < threshold { StepControl::Stop } else { StepControl::Continue });
        let (traj, term) = match res {
            Ok(r) => r,
            Err(fail) => {
                let last_t = fail.last_t;
                if fail.partial.n_steps() > 0 {
                    trace.t_max = fail.partial.t_end();
                    trace.segments.push(TraceSegment { chart, traj: fail.partial });
                }
                trace.conjugate_time = find_conjugate(&trace);
                return Err(ShootError { error: Error::Shooting { theta, last_t, reason: fail.reason }, partial: trace });
            }
        };
        t = traj.t_end();
        y = traj.last_state().to_vec();
        if traj.n_steps() > 0 {
            trace.segments.push(TraceSegment { chart, traj });
        }
        trace.t_max = t;
        if term == Termination::Completed {
            break;
        }
        match convert_state(surface, chart, &y) {
            Some((nc, ny)) => {
                chart = nc;
                y = ny.to_vec();
                threshold = opts.switch_quality;
            }
            // No better chart here: carry on and only stop again much closer
            // to the singular band.
            None => threshold *= 0.1,
        }
        switches += 1;
        if switches > 100_000 {
            trace.conjugate_time = find_conjugate(&trace);
            return Err(ShootError { error: Error::Shooting { theta, last_t: t, reason: "too many chart switches".into() }, partial: trace });
        }
    }
    trace.conjugate_time = find_conjugate(&trace);
    Ok(trace)
}

fn find_conjugate(trace: &GeodesicTrace) -> Option<f64> {
    for seg in &trace.segments {
        let t0 = seg.traj.t_start().max(CONJUGATE_T_MIN);
        if t0 >= seg.traj.t_end() {
            continue;
        }
        if let Some(t) = first_zero(&seg.traj, IDX_F, t0) {
            return Some(t);
        }
    }
    None
}

impl GeodesicTrace {
    fn segment_index(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0 && t <= self.t_max) || self.segments.is_empty() {
            return Err(Error::OutOfRange { what: "t", value: t, lo: 0.0, hi: self.t_max });
        }
        let i = self.segments.partition_point(|s| s.traj.t_start() <= t);
        Ok(i.saturating_sub(1))
    }

    /// (chart, state) at time t.
    pub fn state_at(&self, t: f64) -> Result<(usize, [f64; STATE_DIM])> {
        let seg = &self.segments[self.segment_index(t)?];
        let mut out = [0.0; STATE_DIM];
        seg.traj.eval_into(t, &mut out)?;
        Ok((seg.chart, out))
    }

    /// F at time t (dense output).
    pub fn jacobian_at(&self, t: f64) -> Result<f64> {
        let seg = &self.segments[self.segment_index(t)?];
        seg.traj.eval_component(t, IDX_F)
    }

    /// ∫₀ᵗ F.
    pub fn area_at(&self, t: f64) -> Result<f64> {
        let seg = &self.segments[self.segment_index(t)?];
        seg.traj.eval_component(t, IDX_AREA)
    }

    pub fn position_at(&self, t: f64) -> Result<Vec3> {
        let (c, y) = self.state_at(t)?;
        Ok(self.base.surface.position(c, y[0], y[1]))
    }

    pub fn point_at(&self, t: f64) -> Result<TracePoint> {
        let (c, y) = self.state_at(t)?;
        let chart = self.base.surface.chart(c);
        let jet = chart.jet(y[0], y[1]);
        let normal = scale(chart.orientation(), crate::surface::normalize(cross(jet.xu, jet.xv)));
        let tangent = axpy(y[2], jet.xu, scale(y[3], jet.xv));
        Ok(TracePoint {
            t,
            chart: c,
            uv: [y[0], y[1]],
            pos: jet.x,
            tangent,
            e_perp: cross(normal, tangent),
            normal,
            f: y[IDX_F],
            fdot: y[IDX_FDOT],
            area: y[IDX_AREA],
        })
    }

    /// Gauss curvature at γ(t).
    pub fn gauss_at(&self, t: f64) -> Result<f64> {
        let (c, y) = self.state_at(t)?;
        let chart = self.base.surface.chart(c);
        Ok(LocalGeometry::from_jet(chart.jet(y[0], y[1]), chart.orientation()).gauss)
    }

    /// (t, state) at every stored breakpoint.
    pub fn breakpoints(&self) -> impl Iterator<Item = (usize, f64, &[f64])> + '_ {
        self.segments
            .iter()
            .flat_map(|seg| seg.traj.breakpoints().iter().enumerate().map(move |(i, &t)| (seg.chart, t, seg.traj.state_at_breakpoint(i))))
    }

    /// max |g(γ′, γ′) − 1| over the breakpoints.
    pub fn max_speed_drift(&self) -> f64 {
        let surf = &self.base.surface;
        self.breakpoints()
            .map(|(c, _, y)| {
                let jet = surf.chart(c).jet(y[0], y[1]);
                let v = axpy(y[2], jet.xu, scale(y[3], jet.xv));
                (dot(v, v) - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Truncated copy on [0, t_end].
    pub fn truncated(&self, t_end: f64) -> Self {
        let segments = self.segments.iter().filter(|s| s.traj.t_start() < t_end).cloned().collect();
        Self { segments, t_max: t_end.min(self.t_max), ..self.clone() }
    }
}

/// Jacobi scalar F along a trace at time t.
pub fn jacobian_at(trace: &GeodesicTrace, t: f64) -> Result<f64> {
    trace.jacobian_at(t)
}

/// Wraps an angle into [0, 2π).
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(2.0 * PI);
    if w >= 2.0 * PI {
        0.0
    } else {
        w
    }
}

/// Distance between two angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}
