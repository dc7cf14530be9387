//! Cut distance d_p(θ), cut-locus length, M_p, tube volumes and a cut-point
//! classifier.
//!
//! Per ray the cut time is found from the other branch reaching γ_θ(t_hi)
//! sooner, where t_hi = min(t_conj, T): a Newton solve for the time at which
//! both branches arrive with equal length, verified against the distance
//! oracle. Predicate bisection is the fallback.

mod classify;

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodesic::{angle_distance, shoot_with, wrap_angle, DistanceOracle, GeodesicTrace, Hit, OracleOptions, ShootOptions};
use crate::numerics::{periodic_derivative, periodic_integral, validate_grid_size, PeriodicSamples};
use crate::surface::{dot, sub, BasePoint, Vec3};

pub use classify::{classify_cut_points, CutPointKind, CutPointRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutOptions {
    /// Angular grid size of the profile.
    pub n: usize,
    /// Fan size of the distance oracle.
    pub n_dist: usize,
    /// Slack in the minimality predicate dist(p, γ(t)) < t − tol_min.
    pub tol_min: f64,
    /// Shooting length as a multiple of the intrinsic diameter upper bound.
    pub length_factor: f64,
    pub shoot: ShootOptions,
    pub oracle: OracleOptions,
}

impl Default for CutOptions {
    fn default() -> Self {
        Self { n: 256, n_dist: 256, tol_min: 1e-6, length_factor: 1.1, shoot: ShootOptions::default(), oracle: OracleOptions::default() }
    }
}

impl CutOptions {
    pub fn with_n(n: usize) -> Self {
        Self { n, ..Self::default() }
    }
}

/// How the cut time of a ray was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutMethod {
    /// No shorter competitor at min(t_conj, T).
    Conjugate,
    /// Equal-length crossing with a second branch.
    Crossing,
    /// Predicate bisection.
    Bisection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayCut {
    pub theta: f64,
    pub d: f64,
    pub f_at_cut: f64,
    pub conjugate_time: Option<f64>,
    /// Initial angle of a second minimizing geodesic reaching the cut point.
    pub partner: Option<f64>,
    pub method: CutMethod,
}

#[derive(Debug, Clone)]
pub struct CutProfile {
    pub base: BasePoint,
    pub t_max: f64,
    pub rays: Vec<RayCut>,
    pub d: PeriodicSamples,
    pub f_at_cut: PeriodicSamples,
    pub d_prime: PeriodicSamples,
    pub d_p: f64,
    pub rho_p: f64,
    pub cut_length: f64,
    pub m_p: f64,
    pub conjugate_flags: Vec<bool>,
    /// w_i = γ_{θ_i}(d_i).
    pub cut_points: Vec<Vec3>,
    pub traces: Vec<Arc<GeodesicTrace>>,
}

/// Shooting length T for a surface: factor × (π/2) × extrinsic diameter bound.
pub fn shooting_length(base: &BasePoint, factor: f64) -> f64 {
    factor * 0.5 * PI * base.surface.extrinsic_diameter_upper()
}

fn shoot_fan(base: &BasePoint, n: usize, t_max: f64, opts: &ShootOptions) -> Result<Vec<Arc<GeodesicTrace>>> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let theta = 2.0 * PI * i as f64 / n as f64;
            shoot_with(base, theta, t_max, opts).map(Arc::new).map_err(|e| Error::Profile { theta, reason: e.error.to_string() })
        })
        .collect()
}

/// Profile traces and oracle fan, sharing traces when one grid refines the other.
pub fn shoot_profile_traces(base: &BasePoint, opts: &CutOptions) -> Result<(Vec<Arc<GeodesicTrace>>, Vec<Arc<GeodesicTrace>>)> {
    validate_grid_size(opts.n)?;
    let t_max = shooting_length(base, opts.length_factor);
    let (n, m) = (opts.n, opts.n_dist);
    if m % n == 0 {
        let fan = shoot_fan(base, m, t_max, &opts.shoot)?;
        let prof = (0..n).map(|i| fan[i * (m / n)].clone()).collect();
        Ok((prof, fan))
    } else if n % m == 0 {
        let prof = shoot_fan(base, n, t_max, &opts.shoot)?;
        let fan = (0..m).map(|j| prof[j * (n / m)].clone()).collect();
        Ok((prof, fan))
    } else {
        Ok((shoot_fan(base, n, t_max, &opts.shoot)?, shoot_fan(base, m, t_max, &opts.shoot)?))
    }
}

/// d_p on an n-point grid with default options.
pub fn compute_cut_profile(p: &BasePoint, n: usize) -> Result<CutProfile> {
    compute_cut_profile_with(p, &CutOptions::with_n(n))
}

pub fn compute_cut_profile_with(p: &BasePoint, opts: &CutOptions) -> Result<CutProfile> {
    let (traces, fan) = shoot_profile_traces(p, opts)?;
    let oracle = DistanceOracle::from_traces(p, fan, OracleOptions { n_dist: opts.n_dist, ..opts.oracle })?;
    compute_cut_profile_from(p, traces, &oracle, opts)
}

/// Solves every ray of `traces` (uniform grid) against `oracle`.
pub fn compute_cut_profile_from(p: &BasePoint, traces: Vec<Arc<GeodesicTrace>>, oracle: &DistanceOracle, opts: &CutOptions) -> Result<CutProfile> {
    validate_grid_size(traces.len())?;
    let rays: Vec<RayCut> = (0..traces.len())
        .into_par_iter()
        .map(|i| {
            solve_ray(&traces[i], oracle, opts).map_err(|e| match e {
                Error::Profile { .. } | Error::SurfaceNotClosed { .. } => e,
                other => Error::Profile { theta: traces[i].theta, reason: other.to_string() },
            })
        })
        .collect::<Result<_>>()?;
    CutProfile::from_rays(p, traces, rays)
}

fn trace_len(len: f64, t_max: f64) -> f64 {
    len + 0.05 * t_max
}

fn solve_ray(tr: &GeodesicTrace, oracle: &DistanceOracle, opts: &CutOptions) -> Result<RayCut> {
    let theta = tr.theta;
    let t_conj = tr.conjugate_time;
    let t_hi = t_conj.map_or(tr.t_max, |c| c.min(tr.t_max));
    let q = tr.point_at(t_hi)?;
    let hit = oracle.shorter_than(q.pos, Some(q.normal), t_hi - opts.tol_min, Some((theta, t_hi)))?;
    let Some(hit) = hit else {
        if t_conj.is_none() {
            return Err(Error::SurfaceNotClosed { theta, t_max: tr.t_max });
        }
        return Ok(RayCut { theta, d: t_hi, f_at_cut: tr.jacobian_at(t_hi)?, conjugate_time: t_conj, partner: None, method: CutMethod::Conjugate });
    };
    let mut start = (hit.theta, hit.length, t_hi);
    for _ in 0..5 {
        let Some((phi, tc)) = crossing(tr, oracle, opts, start, t_hi)? else { break };
        let w = tr.point_at(tc)?;
        match oracle.shorter_than(w.pos, Some(w.normal), tc - opts.tol_min, Some((theta, tc)))? {
            Some(h) => start = (h.theta, h.length, tc),
            None => {
                return Ok(RayCut { theta, d: tc, f_at_cut: w.f, conjugate_time: t_conj, partner: Some(phi), method: CutMethod::Crossing });
            }
        }
    }
    bisect_ray(tr, oracle, opts, t_hi, hit)
}

/// Newton on (φ, L, t) for γ_φ(L) = γ_θ(t), L = t.
fn crossing(tr: &GeodesicTrace, oracle: &DistanceOracle, opts: &CutOptions, start: (f64, f64, f64), t_hi: f64) -> Result<Option<(f64, f64)>> {
    let base = oracle.base();
    let t_max = tr.t_max;
    let eval = |x: [f64; 3]| -> Option<([f64; 3], [[f64; 3]; 3])> {
        let (phi, len, t) = (x[0], x[1], x[2]);
        if !(t > 0.0 && t <= t_hi + 1e-9 && len > 0.0 && len < 1.2 * t_max) {
            return None;
        }
        let other = shoot_with(base, phi, trace_len(len, t_max), &opts.shoot).ok()?;
        let a = other.point_at(len).ok()?;
        let b = tr.point_at(t).ok()?;
        let r = sub(a.pos, b.pos);
        let res = [dot(r, b.tangent), dot(r, b.e_perp), len - t];
        let jac = [
            [a.f * dot(a.e_perp, b.tangent), dot(a.tangent, b.tangent), -1.0],
            [a.f * dot(a.e_perp, b.e_perp), dot(a.tangent, b.e_perp), 0.0],
            [0.0, 1.0, -1.0],
        ];
        Some((res, jac))
    };
    let nrm = |r: &[f64; 3]| (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    let mut x = [start.0, start.1, start.2];
    let Some((mut res, mut jac)) = eval(x) else { return Ok(None) };
    for _ in 0..40 {
        if nrm(&res) < opts.oracle.newton_tol {
            let phi = wrap_angle(x[0]);
            if angle_distance(phi, tr.theta) < 1e-4 {
                return Ok(None);
            }
            return Ok(Some((phi, x[2])));
        }
        let Some(dx) = solve3(jac, [-res[0], -res[1], -res[2]]) else { return Ok(None) };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let trial = [x[0] + lambda * dx[0], x[1] + lambda * dx[1], x[2] + lambda * dx[2]];
            if let Some((r2, j2)) = eval(trial) {
                if nrm(&r2) < nrm(&res) {
                    x = trial;
                    res = r2;
                    jac = j2;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Ok(None);
        }
    }
    Ok(None)
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    let scale: f64 = a.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    if !(d.abs() > 1e-14 * scale.powi(3)) {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for i in 0..3 {
            m[i][k] = b[i];
        }
        *o = det(m) / d;
    }
    Some(out)
}

fn bisect_ray(tr: &GeodesicTrace, oracle: &DistanceOracle, opts: &CutOptions, t_hi: f64, hit: Hit) -> Result<RayCut> {
    let theta = tr.theta;
    let pred = |t: f64| -> Result<Option<Hit>> {
        let q = tr.point_at(t)?;
        oracle.shorter_than(q.pos, Some(q.normal), t - opts.tol_min, Some((theta, t)))
    };
    let (mut lo, mut hi) = (0.5 * t_hi, t_hi);
    let mut partner = hit.theta;
    for _ in 0..20 {
        match pred(lo)? {
            Some(h) => {
                hi = lo;
                partner = h.theta;
                lo *= 0.5;
            }
            None => break,
        }
    }
    while hi - lo > 1e-10 * t_hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        match pred(mid)? {
            Some(h) => {
                hi = mid;
                partner = h.theta;
            }
            None => lo = mid,
        }
    }
    let d = 0.5 * (lo + hi);
    Ok(RayCut { theta, d, f_at_cut: tr.jacobian_at(d)?, conjugate_time: tr.conjugate_time, partner: Some(partner), method: CutMethod::Bisection })
}

impl CutProfile {
    /// Assembles derived quantities from solved rays.
    pub fn from_rays(base: &BasePoint, traces: Vec<Arc<GeodesicTrace>>, rays: Vec<RayCut>) -> Result<Self> {
        if traces.len() != rays.len() {
            return Err(Error::InvalidParameter(format!("{} traces but {} rays", traces.len(), rays.len())));
        }
        validate_grid_size(rays.len())?;
        let d = PeriodicSamples::new(rays.iter().map(|r| r.d).collect())?;
        let f_at_cut = PeriodicSamples::new(rays.iter().map(|r| r.f_at_cut).collect())?;
        let d_prime = periodic_derivative(&d);
        let d_p = d.max();
        let rho_p = d.min();
        if !(rho_p > 0.0) {
            return Err(Error::Consistency { what: "rho_p".into(), value: rho_p, expected: 0.0 });
        }
        let cut_points = rays.iter().zip(&traces).map(|(r, tr)| tr.position_at(r.d)).collect::<Result<Vec<_>>>()?;
        let conj_tol = conjugate_tolerance(d_p);
        let conjugate_flags = rays.iter().map(|r| r.f_at_cut < conj_tol).collect();
        let t_max = traces.iter().map(|t| t.t_max).fold(f64::INFINITY, f64::min);
        let mut prof = Self {
            base: base.clone(),
            t_max,
            rays,
            d,
            f_at_cut,
            d_prime,
            d_p,
            rho_p,
            cut_length: 0.0,
            m_p: 0.0,
            conjugate_flags,
            cut_points,
            traces,
        };
        prof.cut_length = cut_locus_length(&prof);
        prof.m_p = m_p(&prof);
        Ok(prof)
    }

    pub fn n(&self) -> usize {
        self.d.n()
    }

    pub fn thetas(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.d.theta(i)).collect()
    }

    pub fn step(&self) -> f64 {
        self.d.step()
    }

    /// Every ray ended at a conjugate point and d is constant: the cut locus
    /// is one point reached by all geodesics.
    pub fn is_focal(&self) -> bool {
        self.d.max() - self.d.min() < 1e-7 && self.f_at_cut.values().iter().all(|f| f.abs() < 1e-6)
    }
}

/// F_at_cut below this marks a conjugate cut point.
pub fn conjugate_tolerance(d_p: f64) -> f64 {
    1e-4 * d_p
}

/// |Cut_p| = ½ ∫ √(F(d,θ)² + d′²) dθ as a polyline over the grid.
pub fn cut_locus_length(profile: &CutProfile) -> f64 {
    if profile.is_focal() {
        return 0.0;
    }
    let n = profile.n();
    let h = profile.step();
    let (d, f) = (&profile.d, &profile.f_at_cut);
    let mut sum = 0.0;
    for i in 0..n {
        let ii = i as isize;
        let fm = 0.5 * (f.at(ii) + f.at(ii + 1));
        let dd = d.at(ii + 1) - d.at(ii);
        sum += (fm * fm * h * h + dd * dd).sqrt();
    }
    0.5 * sum
}

/// M_p = ∫ F(d,θ)/d dθ.
pub fn m_p(profile: &CutProfile) -> f64 {
    periodic_integral(&profile.f_at_cut.zip_map(&profile.d, |f, d| f / d))
}

/// |Ω_ε| = ∫∫_{d−ε ≤ t ≤ d} F dt dθ.
pub fn tube_volume(profile: &CutProfile, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < profile.rho_p) {
        return Err(Error::OutOfRange { what: "eps", value: eps, lo: 0.0, hi: profile.rho_p });
    }
    let vals = profile.rays.iter().zip(&profile.traces).map(|(r, tr)| Ok(tr.area_at(r.d)? - tr.area_at(r.d - eps)?)).collect::<Result<Vec<_>>>()?;
    Ok(periodic_integral(&PeriodicSamples::new(vals)?))
}

/// lim |Ω_ε|/ε by Richardson extrapolation over ε, ε/2, ε/4.
pub fn tube_volume_limit(profile: &CutProfile, eps: f64) -> Result<f64> {
    let r = |e: f64| tube_volume(profile, e).map(|v| v / e);
    let (a, b, c) = (r(eps)?, r(0.5 * eps)?, r(0.25 * eps)?);
    // |Ω_ε|/ε = L + c₁ε + c₂ε² + …
    let ab = 2.0 * b - a;
    let bc = 2.0 * c - b;
    Ok((4.0 * bc - ab) / 3.0)
}

/// ∫ A(d(θ), θ) dθ with A = ∫₀ᵈ F dt: the intrinsic area seen from p.
pub fn intrinsic_area_from_profile(profile: &CutProfile) -> Result<f64> {
    let vals = profile.rays.iter().zip(&profile.traces).map(|(r, tr)| tr.area_at(r.d)).collect::<Result<Vec<_>>>()?;
    Ok(periodic_integral(&PeriodicSamples::new(vals)?))
}
