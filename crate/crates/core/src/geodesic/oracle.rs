//! Two-point distance from a fixed base point.
//!
//! A fan of traces is sampled on a (θ, t) grid. A query scans the grid for
//! local minima of |γ_θ(t) − q|, refines the closest approach on the fan
//! trace, then runs a damped Newton iteration on θ using ∂γ/∂θ = F·E.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{angle_distance, shoot_with, wrap_angle, GeodesicTrace, ShootOptions, TracePoint};
use crate::error::{Error, Result};
use crate::numerics::brent_min;
use crate::surface::{cross, dot, norm, normalize, scale, sub, BasePoint, ParametricSurface, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    pub n_dist: usize,
    pub shoot: ShootOptions,
    /// Newton stops once |γ_θ(t) − q| drops below this.
    pub newton_tol: f64,
    /// Arrival lengths within this of the minimum count as minimizing.
    pub tie_tol: f64,
    /// Angles closer than this are merged.
    pub angle_merge: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self { n_dist: 256, shoot: ShootOptions::default(), newton_tol: 1e-10, tie_tol: 1e-7, angle_merge: 1e-6 }
    }
}

/// A geodesic from the base point reaching q: γ_θ(length) = q.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hit {
    pub theta: f64,
    pub length: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub length: f64,
    /// Distinct minimizing initial angles; empty when `degenerate`.
    pub angles: Vec<f64>,
    /// A continuum of minimizers (e.g. antipode of a round sphere).
    pub degenerate: bool,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    p: Vec3,
    n: Vec3,
    f: f64,
}

#[derive(Debug, Clone)]
pub struct DistanceOracle {
    base: BasePoint,
    traces: Vec<Arc<GeodesicTrace>>,
    t_max: f64,
    nk: usize,
    dt: f64,
    dtheta: f64,
    samples: Vec<Sample>,
    opts: OracleOptions,
}

struct Candidate {
    j: usize,
    t: f64,
    delta: f64,
    f: f64,
    lower: f64,
}

enum Search {
    Shortest,
    Ties,
}

fn grid_angle(j: usize, n: usize) -> f64 {
    2.0 * PI * j as f64 / n as f64
}

/// Closest approach of a trace to q near t0, restricted to [lo, hi].
fn closest_approach(tr: &GeodesicTrace, q: Vec3, t0: f64, lo: f64, hi: f64) -> Result<(TracePoint, f64)> {
    let gap = |t: f64| -> Result<(TracePoint, f64)> {
        let pt = tr.point_at(t)?;
        Ok((pt, dot(sub(pt.pos, q), pt.tangent)))
    };
    // Newton on (γ(t) − q)·γ′(t) = 0; its t-derivative is ≈ 1.
    let mut t = t0.clamp(lo, hi);
    for _ in 0..12 {
        let (pt, g) = gap(t)?;
        if g.abs() < 1e-15 {
            return Ok((pt, norm(sub(pt.pos, q))));
        }
        let tn = t - g;
        if !(tn >= lo && tn <= hi) {
            break;
        }
        if (tn - t).abs() < 1e-15 {
            let pt = tr.point_at(tn)?;
            return Ok((pt, norm(sub(pt.pos, q))));
        }
        t = tn;
    }
    let (tm, _) = brent_min(|s| tr.position_at(s).map(|x| norm(sub(x, q))).unwrap_or(f64::INFINITY), lo, hi, 1e-13, 200);
    let pt = tr.point_at(tm)?;
    Ok((pt, norm(sub(pt.pos, q))))
}

impl DistanceOracle {
    /// Shoots a fan of `opts.n_dist` traces of length `t_max`.
    pub fn new(base: &BasePoint, t_max: f64, opts: OracleOptions) -> Result<Self> {
        if opts.n_dist < 8 {
            return Err(Error::InvalidParameter(format!("n_dist must be at least 8, got {}", opts.n_dist)));
        }
        let n = opts.n_dist;
        let traces: Vec<Arc<GeodesicTrace>> = (0..n)
            .into_par_iter()
            .map(|j| shoot_with(base, grid_angle(j, n), t_max, &opts.shoot).map(Arc::new).map_err(Error::from))
            .collect::<Result<_>>()?;
        Self::from_traces(base, traces, opts)
    }

    /// Builds from an existing uniform fan; trace j must start at angle 2πj/n.
    pub fn from_traces(base: &BasePoint, traces: Vec<Arc<GeodesicTrace>>, mut opts: OracleOptions) -> Result<Self> {
        let n = traces.len();
        if n < 8 {
            return Err(Error::InvalidParameter(format!("distance fan needs at least 8 traces, got {n}")));
        }
        opts.n_dist = n;
        let t_max = traces.iter().map(|t| t.t_max).fold(f64::INFINITY, f64::min);
        for (j, tr) in traces.iter().enumerate() {
            if (tr.theta - grid_angle(j, n)).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("fan trace {j} has angle {} (expected uniform grid)", tr.theta)));
            }
        }
        let nk = (2 * n).clamp(128, 1024);
        let dt = t_max / nk as f64;
        let per: Vec<Vec<Sample>> = traces
            .par_iter()
            .map(|tr| {
                (0..=nk)
                    .map(|k| {
                        let pt = tr.point_at((k as f64 * dt).min(tr.t_max))?;
                        Ok(Sample { p: pt.pos, n: pt.normal, f: pt.f })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(Self { base: base.clone(), traces, t_max, nk, dt, dtheta: 2.0 * PI / n as f64, samples: per.into_iter().flatten().collect(), opts })
    }

    pub fn base(&self) -> &BasePoint {
        &self.base
    }

    pub fn traces(&self) -> &[Arc<GeodesicTrace>] {
        &self.traces
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn options(&self) -> &OracleOptions {
        &self.opts
    }

    fn surface(&self) -> &ParametricSurface {
        &self.base.surface
    }

    fn sample(&self, j: usize, k: usize) -> &Sample {
        &self.samples[j * (self.nk + 1) + k]
    }

    fn normal_at(&self, q: Vec3) -> Result<Vec3> {
        let (c, u, v, _) = self.surface().best_chart(q).ok_or(Error::DistanceOracle)?;
        let chart = self.surface().chart(c);
        let jet = chart.jet(u, v);
        Ok(scale(chart.orientation(), normalize(cross(jet.xu, jet.xv))))
    }

    /// Geodesic distance from the base point to q with the minimizing angles.
    pub fn distance(&self, q: Vec3) -> Result<DistanceResult> {
        let nq = self.normal_at(q)?;
        let hits = self.search(q, nq, f64::INFINITY, None, Search::Ties)?;
        let best = hits.iter().map(|h| h.length).fold(f64::INFINITY, f64::min);
        if !best.is_finite() {
            return Err(Error::DistanceOracle);
        }
        let mut angles: Vec<f64> = hits.iter().filter(|h| h.length <= best + self.opts.tie_tol).map(|h| h.theta).collect();
        angles.sort_by(f64::total_cmp);
        let mut merged: Vec<f64> = Vec::new();
        for a in angles {
            if merged.last().is_none_or(|&b| a - b > self.opts.angle_merge) {
                merged.push(a);
            }
        }
        if merged.len() > 1 && merged[0] + 2.0 * PI - merged[merged.len() - 1] <= self.opts.angle_merge {
            merged.pop();
        }
        let degenerate = merged.len() >= (self.traces.len() / 16).max(8);
        if degenerate {
            merged.clear();
        }
        Ok(DistanceResult { length: best, angles: merged, degenerate })
    }

    /// Shortest geodesic to q strictly shorter than `bound`, if any.
    ///
    /// `exclude = (θ, t)` skips fan candidates that just reproduce γ_θ near
    /// time t (q = γ_θ(t) in the cut-time predicate).
    pub fn shorter_than(&self, q: Vec3, normal: Option<Vec3>, bound: f64, exclude: Option<(f64, f64)>) -> Result<Option<Hit>> {
        let nq = match normal {
            Some(n) => n,
            None => self.normal_at(q)?,
        };
        let hits = self.search(q, nq, bound, exclude, Search::Shortest)?;
        Ok(hits.into_iter().filter(|h| h.length < bound).min_by(|a, b| a.length.total_cmp(&b.length)))
    }

    fn candidates(&self, q: Vec3, nq: Vec3, bound: f64, exclude: Option<(f64, f64)>) -> Result<Vec<Candidate>> {
        let n = self.traces.len();
        let k_hi = if bound.is_finite() { (((bound / self.dt).ceil() as usize) + 2).min(self.nk) } else { self.nk };
        let mut dist = vec![f64::INFINITY; n * (k_hi + 1)];
        for j in 0..n {
            for k in 0..=k_hi {
                dist[j * (k_hi + 1) + k] = norm(sub(self.sample(j, k).p, q));
            }
        }
        let d = |j: usize, k: usize| dist[j * (k_hi + 1) + k];
        let scale_len = self.surface().extrinsic_diameter_upper().max(1.0);
        let mut out = Vec::new();
        for j in 0..n {
            let (jm, jp) = ((j + n - 1) % n, (j + 1) % n);
            for k in 0..=k_hi {
                let s = self.sample(j, k);
                let dj = d(j, k);
                if dj > 2.0 * (self.dt + s.f.abs() * self.dtheta) + 1e-9 * scale_len {
                    continue;
                }
                if dot(s.n, nq) <= 0.0 {
                    continue;
                }
                let mut is_min = true;
                'nb: for jj in [jm, j, jp] {
                    for kk in k.saturating_sub(1)..=(k + 1).min(k_hi) {
                        if (jj, kk) != (j, k) && d(jj, kk) < dj {
                            is_min = false;
                            break 'nb;
                        }
                    }
                }
                if !is_min {
                    continue;
                }
                let tk = k as f64 * self.dt;
                let lo = (tk - self.dt).max(0.0);
                let hi = (tk + self.dt).min(self.traces[j].t_max);
                let (pt, delta) = closest_approach(&self.traces[j], q, tk, lo, hi)?;
                if let Some((te, tt)) = exclude {
                    if angle_distance(grid_angle(j, n), te) <= 1.5 * self.dtheta && (pt.t - tt).abs() < 0.1 * scale_len {
                        continue;
                    }
                }
                out.push(Candidate { j, t: pt.t, delta, f: pt.f, lower: pt.t - 1.5 * delta });
            }
        }
        out.sort_by(|a, b| a.lower.total_cmp(&b.lower));
        Ok(out)
    }

    fn search(&self, q: Vec3, nq: Vec3, bound: f64, exclude: Option<(f64, f64)>, mode: Search) -> Result<Vec<Hit>> {
        let cands = self.candidates(q, nq, bound, exclude)?;
        let n = self.traces.len();
        let mut hits: Vec<Hit> = Vec::new();
        let mut best = f64::INFINITY;
        let mut failures = 0usize;
        for c in &cands {
            let limit = match mode {
                Search::Shortest => bound.min(best),
                Search::Ties => bound.min(best + self.opts.tie_tol),
            };
            if c.lower >= limit {
                break;
            }
            let theta_j = grid_angle(c.j, n);
            if let Search::Shortest = mode {
                // Already converged onto this branch from a neighbouring trace.
                if hits.iter().any(|h| angle_distance(h.theta, theta_j) < 1.5 * self.dtheta && (h.length - c.t).abs() < 2.0 * c.delta + self.dt) {
                    continue;
                }
            }
            // Near a conjugate point the whole fan focuses on q and θ is not
            // determined by Newton; accept the fan trace as is.
            let focal = c.f.abs() < 1e-6 && c.delta < 1e-7;
            let hit = if c.delta < self.opts.newton_tol || focal {
                Some(Hit { theta: theta_j, length: c.t, residual: c.delta })
            } else {
                match self.newton(q, theta_j, &self.traces[c.j], c.t, c.delta)? {
                    Some(h) => Some(h),
                    None => self.widened(q, theta_j, c.t, c.delta)?,
                }
            };
            match hit {
                Some(h) => {
                    if let Some((te, tt)) = exclude {
                        if angle_distance(h.theta, te) < 1e-6 && (h.length - tt).abs() < 1e-6 {
                            continue;
                        }
                    }
                    best = best.min(h.length);
                    hits.push(h);
                }
                None => failures += 1,
            }
        }
        if hits.is_empty() && failures > 0 {
            return Err(Error::DistanceOracle);
        }
        Ok(hits)
    }

    fn trace_len(&self, t: f64, delta: f64) -> f64 {
        (t + (10.0 * delta).max(0.05 * self.t_max)).min(1.2 * self.t_max)
    }

    /// Damped Newton on θ starting from `tr` (already shot at θ).
    fn newton(&self, q: Vec3, theta0: f64, tr: &GeodesicTrace, t0: f64, delta0: f64) -> Result<Option<Hit>> {
        let mut theta = theta0;
        let mut pt = tr.point_at(t0)?;
        let mut delta = delta0;
        for _ in 0..30 {
            if delta < self.opts.newton_tol {
                return Ok(Some(Hit { theta: wrap_angle(theta), length: pt.t, residual: delta }));
            }
            if pt.f.abs() < 1e-12 {
                return Ok(None);
            }
            let r = sub(q, pt.pos);
            let step = dot(r, pt.e_perp) / pt.f;
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..20 {
                let th = theta + lambda * step;
                let len = self.trace_len(pt.t, delta);
                let Ok(ntr) = shoot_with(&self.base, th, len, &self.opts.shoot) else {
                    lambda *= 0.5;
                    continue;
                };
                let w = (4.0 * delta).max(1e-3 * self.t_max);
                let lo = (pt.t - w).max(0.0);
                let hi = (pt.t + w).min(ntr.t_max);
                if lo >= hi {
                    lambda *= 0.5;
                    continue;
                }
                let (npt, nd) = closest_approach(&ntr, q, pt.t, lo, hi)?;
                if nd < delta {
                    theta = th;
                    pt = npt;
                    delta = nd;
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !improved {
                return Ok(None);
            }
        }
        Ok(if delta < self.opts.newton_tol { Some(Hit { theta: wrap_angle(theta), length: pt.t, residual: delta }) } else { None })
    }

    /// Fallback after a Newton failure: rescan ±Δθ around the candidate.
    fn widened(&self, q: Vec3, theta_j: f64, t0: f64, delta: f64) -> Result<Option<Hit>> {
        let mut best: Option<(f64, GeodesicTrace, TracePoint, f64)> = None;
        let len = self.trace_len(t0, delta);
        for i in 0..=16 {
            let th = theta_j + self.dtheta * (i as f64 / 8.0 - 1.0);
            let Ok(tr) = shoot_with(&self.base, th, len, &self.opts.shoot) else { continue };
            let w = (4.0 * delta).max(2.0 * self.dt);
            let lo = (t0 - w).max(0.0);
            let hi = (t0 + w).min(tr.t_max);
            if lo >= hi {
                continue;
            }
            let (pt, d) = closest_approach(&tr, q, t0, lo, hi)?;
            if best.as_ref().is_none_or(|b| d < b.3) {
                best = Some((th, tr, pt, d));
            }
        }
        match best {
            Some((th, tr, pt, d)) => {
                if d < self.opts.newton_tol {
                    return Ok(Some(Hit { theta: wrap_angle(th), length: pt.t, residual: d }));
                }
                self.newton(q, th, &tr, pt.t, d)
            }
            None => Ok(None),
        }
    }
}

/// Geodesic distance between two surface points (default oracle settings,
/// 64-trace fan).
pub fn geodesic_distance(surface: &ParametricSurface, p: Vec3, q: Vec3) -> Result<f64> {
    let base = BasePoint::at_point(surface, p)?;
    let t_max = 1.1 * 0.5 * PI * surface.extrinsic_diameter_upper();
    let opts = OracleOptions { n_dist: 64, ..OracleOptions::default() };
    Ok(DistanceOracle::new(&base, t_max, opts)?.distance(q)?.length)
}
