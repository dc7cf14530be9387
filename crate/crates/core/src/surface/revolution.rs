//! Surfaces of revolution from unit-speed generatrices (ρ(s), z(s)).

use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{brent_root, Chebyshev, CubicSpline};

use super::{Chart, ChartDomain, Jet, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub rho: f64,
    pub drho: f64,
    pub ddrho: f64,
    pub z: f64,
    pub dz: f64,
    pub ddz: f64,
}

/// Generatrix parametrized by arclength on [0, L].
pub trait ArclengthProfile: Send + Sync + Debug {
    fn length(&self) -> f64;
    fn eval(&self, s: f64) -> ProfilePoint;
    /// (family name, named parameters).
    fn descriptor(&self) -> (String, Vec<(String, f64)>);
    /// True when the profile is symmetric under s ↦ L − s (mirror about a
    /// horizontal plane).
    fn equator_symmetric(&self) -> bool {
        false
    }
}

/// Tangent angle φ(s) = πs/L + Σ_k α_k sin(2πks/L), ρ′ = cos φ, z′ = sin φ.
///
/// The sine series keeps φ(L − s) = π − φ(s), so the curve closes; convexity
/// needs φ′ > 0, i.e. Σ 2k|α_k| < 1.
#[derive(Debug, Clone)]
pub struct TangentAngleProfile {
    length: f64,
    alphas: Vec<f64>,
    rho: Chebyshev,
    z: Chebyshev,
    z_shift: f64,
}

impl TangentAngleProfile {
    pub fn new(length: f64, alphas: Vec<f64>) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidParameter(format!("profile length must be positive, got {length}")));
        }
        let slope: f64 = alphas.iter().enumerate().map(|(k, a)| 2.0 * (k + 1) as f64 * a.abs()).sum();
        if !(slope < 1.0) {
            return Err(Error::InvalidParameter(format!("tangent-angle coefficients give a non-convex profile (sum 2k|alpha_k| = {slope} >= 1)")));
        }
        let phi = {
            let al = alphas.clone();
            move |s: f64| tangent_angle(length, &al, s).0
        };
        let drho = Chebyshev::fit_adaptive(|s| phi(s).cos(), 0.0, length, 1e-14, 1024)?;
        let dz = Chebyshev::fit_adaptive(|s| phi(s).sin(), 0.0, length, 1e-14, 1024)?;
        let rho = drho.antiderivative();
        let z = dz.antiderivative();
        let z_shift = 0.5 * z.eval(length);
        Ok(Self { length, alphas, rho, z, z_shift })
    }

    /// Round sphere of radius r as a tangent-angle profile.
    pub fn sphere(r: f64) -> Result<Self> {
        Self::new(PI * r, Vec::new())
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }
}

/// (φ, φ′) at s.
fn tangent_angle(length: f64, alphas: &[f64], s: f64) -> (f64, f64) {
    let w = 2.0 * PI / length;
    let mut phi = PI * s / length;
    let mut dphi = PI / length;
    for (k, a) in alphas.iter().enumerate() {
        let kk = (k + 1) as f64;
        let (sn, cs) = (kk * w * s).sin_cos();
        phi += a * sn;
        dphi += a * kk * w * cs;
    }
    (phi, dphi)
}

impl ArclengthProfile for TangentAngleProfile {
    fn length(&self) -> f64 {
        self.length
    }

    fn eval(&self, s: f64) -> ProfilePoint {
        let (phi, dphi) = tangent_angle(self.length, &self.alphas, s);
        let (sp, cp) = phi.sin_cos();
        ProfilePoint { rho: self.rho.eval(s), drho: cp, ddrho: -sp * dphi, z: self.z.eval(s) - self.z_shift, dz: sp, ddz: cp * dphi }
    }

    fn descriptor(&self) -> (String, Vec<(String, f64)>) {
        let mut p = vec![("L".to_string(), self.length)];
        for (k, a) in self.alphas.iter().enumerate() {
            p.push((format!("alpha{}", k + 1), *a));
        }
        ("tangent-angle".into(), p)
    }

    fn equator_symmetric(&self) -> bool {
        true
    }
}

/// Meridian (a sin u, −c cos u) of the spheroid with semi-axes (a, a, c),
/// reparametrized by arclength.
#[derive(Debug, Clone)]
pub struct EllipseMeridianProfile {
    a: f64,
    c: f64,
    sigma: Chebyshev,
    length: f64,
}

impl EllipseMeridianProfile {
    pub fn new(a: f64, c: f64) -> Result<Self> {
        if !(a > 0.0 && c > 0.0) {
            return Err(Error::InvalidParameter(format!("meridian semi-axes must be positive, got ({a}, {c})")));
        }
        let speed = Chebyshev::fit_adaptive(|u: f64| (a * a * u.cos().powi(2) + c * c * u.sin().powi(2)).sqrt(), 0.0, PI, 1e-14, 4096)?;
        let sigma = speed.antiderivative();
        let length = sigma.eval(PI);
        Ok(Self { a, c, sigma, length })
    }

    fn speed(&self, u: f64) -> (f64, f64) {
        let (su, cu) = u.sin_cos();
        let sp = (self.a * self.a * cu * cu + self.c * self.c * su * su).sqrt();
        let dsp = (self.c * self.c - self.a * self.a) * su * cu / sp;
        (sp, dsp)
    }

    /// Ellipse parameter u at arclength s.
    pub fn parameter_at(&self, s: f64) -> f64 {
        let s = s.clamp(0.0, self.length);
        let mut u = PI * s / self.length;
        for _ in 0..50 {
            let du = (self.sigma.eval(u) - s) / self.speed(u).0;
            u = (u - du).clamp(0.0, PI);
            if du.abs() < 1e-15 {
                break;
            }
        }
        u
    }
}

impl ArclengthProfile for EllipseMeridianProfile {
    fn length(&self) -> f64 {
        self.length
    }

    fn eval(&self, s: f64) -> ProfilePoint {
        let u = self.parameter_at(s);
        let (su, cu) = u.sin_cos();
        let (sp, dsp) = self.speed(u);
        let du = 1.0 / sp;
        let ddu = -dsp * du * du * du;
        let (a, c) = (self.a, self.c);
        ProfilePoint {
            rho: a * su,
            drho: a * cu * du,
            ddrho: -a * su * du * du + a * cu * ddu,
            z: -c * cu,
            dz: c * su * du,
            ddz: c * cu * du * du + c * su * ddu,
        }
    }

    fn descriptor(&self) -> (String, Vec<(String, f64)>) {
        ("ellipse-meridian".into(), vec![("a".into(), self.a), ("c".into(), self.c)])
    }

    fn equator_symmetric(&self) -> bool {
        true
    }
}

/// Generatrix from uniform samples (s_j, ρ_j, z_j), interpolated by C²
/// cubic splines.
#[derive(Debug, Clone)]
pub struct SampledProfile {
    rho: CubicSpline,
    z: CubicSpline,
    length: f64,
}

impl SampledProfile {
    pub fn new(s: Vec<f64>, rho: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        let length = *s.last().ok_or_else(|| Error::InvalidParameter("empty profile samples".into()))?;
        if s[0] != 0.0 {
            return Err(Error::InvalidParameter("sampled profile must start at s = 0".into()));
        }
        Ok(Self { rho: CubicSpline::new(s.clone(), rho)?, z: CubicSpline::new(s, z)?, length })
    }
}

impl ArclengthProfile for SampledProfile {
    fn length(&self) -> f64 {
        self.length
    }

    fn eval(&self, s: f64) -> ProfilePoint {
        let (r, dr, ddr) = self.rho.eval3(s);
        let (z, dz, ddz) = self.z.eval3(s);
        ProfilePoint { rho: r, drho: dr, ddrho: ddr, z, dz, ddz }
    }

    fn descriptor(&self) -> (String, Vec<(String, f64)>) {
        ("sampled".into(), vec![("L".into(), self.length)])
    }
}

/// Checks the closing conditions of a generatrix.
pub(super) fn validate_closed(p: &dyn ArclengthProfile) -> Result<()> {
    let l = p.length();
    if !(l > 0.0) {
        return Err(Error::InvalidParameter("profile length must be positive".into()));
    }
    let (a, b) = (p.eval(0.0), p.eval(l));
    let scale = l;
    if a.rho.abs() > 1e-9 * scale || b.rho.abs() > 1e-9 * scale {
        return Err(Error::InvalidParameter(format!("profile does not close: rho(0) = {}, rho(L) = {}", a.rho, b.rho)));
    }
    if (a.drho - 1.0).abs() > 1e-8 || (b.drho + 1.0).abs() > 1e-8 {
        return Err(Error::InvalidParameter(format!("profile caps are not smooth: rho'(0) = {}, rho'(L) = {}", a.drho, b.drho)));
    }
    for i in 0..=200 {
        let s = l * i as f64 / 200.0;
        let q = p.eval(s);
        let speed = q.drho.hypot(q.dz);
        if (speed - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter(format!("profile is not unit speed at s = {s}: |c'| = {speed}")));
        }
        if i > 0 && i < 200 && !(q.rho > 0.0) {
            return Err(Error::InvalidParameter(format!("profile touches the axis at s = {s}")));
        }
    }
    Ok(())
}

/// Cap boundary: where |ρ′| drops to this value.
const CAP_SLOPE: f64 = 0.5;

/// (s, r) of the cap boundary on the bottom (s near 0) or top (s near L).
fn cap_boundary(p: &dyn ArclengthProfile, top: bool) -> Result<(f64, f64)> {
    let l = p.length();
    let target = if top { -CAP_SLOPE } else { CAP_SLOPE };
    let f = |s: f64| p.eval(s).drho - target;
    let (lo, hi) = if top { (0.5 * l, l) } else { (0.0, 0.5 * l) };
    let s = brent_root(f, lo, hi, 1e-14, 200).ok_or_else(|| Error::InvalidParameter("profile slope never reaches the cap threshold".into()))?;
    Ok((s, p.eval(s).rho))
}

/// (s, v) ↦ (ρ(s) cos v, ρ(s) sin v, z(s)); singular at the poles.
#[derive(Debug, Clone)]
pub struct MeridianChart {
    profile: Arc<dyn ArclengthProfile>,
    r_cap_bottom: f64,
    r_cap_top: f64,
    closed: bool,
}

impl MeridianChart {
    pub fn new(profile: Arc<dyn ArclengthProfile>) -> Result<Self> {
        let (_, rb) = cap_boundary(profile.as_ref(), false)?;
        let (_, rt) = cap_boundary(profile.as_ref(), true)?;
        Ok(Self { profile, r_cap_bottom: rb, r_cap_top: rt, closed: true })
    }

    pub fn new_open(profile: Arc<dyn ArclengthProfile>) -> Result<Self> {
        let l = profile.length();
        let r = 0.1 * (0..=100).map(|i| profile.eval(l * i as f64 / 100.0).rho).fold(0.0, f64::max);
        Ok(Self { profile, r_cap_bottom: r, r_cap_top: r, closed: false })
    }

    pub fn extrinsic_diameter_upper(&self) -> f64 {
        let l = self.profile.length();
        let n = 400;
        let mut rmax: f64 = 0.0;
        let (mut zlo, mut zhi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..=n {
            let q = self.profile.eval(l * i as f64 / n as f64);
            rmax = rmax.max(q.rho);
            zlo = zlo.min(q.z);
            zhi = zhi.max(q.z);
        }
        // Sampling slack: the profile moves at unit speed.
        let slack = 2.0 * l / n as f64;
        (2.0 * rmax + slack).hypot(zhi - zlo + slack)
    }
}

impl Chart for MeridianChart {
    fn domain(&self) -> ChartDomain {
        let l = self.profile.length();
        ChartDomain { u: (0.0, l), v: (0.0, 2.0 * PI), u_periodic: false, v_periodic: true }
    }

    fn jet(&self, s: f64, v: f64) -> Jet {
        let q = self.profile.eval(s);
        let (sv, cv) = v.sin_cos();
        Jet {
            x: [q.rho * cv, q.rho * sv, q.z],
            xu: [q.drho * cv, q.drho * sv, q.dz],
            xv: [-q.rho * sv, q.rho * cv, 0.0],
            xuu: [q.ddrho * cv, q.ddrho * sv, q.ddz],
            xuv: [-q.drho * sv, q.drho * cv, 0.0],
            xvv: [-q.rho * cv, -q.rho * sv, 0.0],
        }
    }

    fn quality(&self, s: f64, _v: f64) -> f64 {
        let l = self.profile.length();
        if !(s > 0.0 && s < l) {
            return 0.0;
        }
        let r_cap = if s < 0.5 * l { self.r_cap_bottom } else { self.r_cap_top };
        (self.profile.eval(s).rho / r_cap).clamp(0.0, 1.0)
    }

    fn invert(&self, p: Vec3) -> Option<(f64, f64)> {
        let l = self.profile.length();
        let f = |s: f64| self.profile.eval(s).z - p[2];
        let s = if self.closed {
            let (f0, f1) = (f(0.0), f(l));
            if f0 >= 0.0 {
                0.0
            } else if f1 <= 0.0 {
                l
            } else {
                brent_root(f, 0.0, l, 1e-15, 200)?
            }
        } else {
            return None;
        };
        Some((s, p[1].atan2(p[0]).rem_euclid(2.0 * PI)))
    }

    fn orientation(&self) -> f64 {
        // ∂_s X × ∂_v X = ρ(−z′ cos v, −z′ sin v, ρ′) points inward when z
        // increases with s.
        -1.0
    }
}

/// Graph chart (x, y, h(r)) over the disc r < r_cap around a pole.
#[derive(Debug, Clone)]
pub struct CapChart {
    profile: Arc<dyn ArclengthProfile>,
    top: bool,
    s_cap: f64,
    r_cap: f64,
}

impl CapChart {
    pub fn new(profile: Arc<dyn ArclengthProfile>, top: bool) -> Result<Self> {
        let (s, r) = cap_boundary(profile.as_ref(), top)?;
        let s_cap = if top { profile.length() - s } else { s };
        Ok(Self { profile, top, s_cap, r_cap: r })
    }

    pub fn r_cap(&self) -> f64 {
        self.r_cap
    }

    /// Profile point at distance r from the axis on this cap's branch.
    fn point_at_radius(&self, r: f64) -> ProfilePoint {
        let l = self.profile.length();
        let at = |w: f64| if self.top { self.profile.eval(l - w) } else { self.profile.eval(w) };
        // ρ is concave and increasing in the distance w from the pole, so
        // Newton from w = r (where ρ(w) ≤ r) converges monotonically.
        let mut w = r.min(self.s_cap);
        for _ in 0..60 {
            let q = at(w);
            let dr = q.drho.abs();
            let step = (r - q.rho) / dr;
            w = (w + step).clamp(0.0, self.s_cap);
            if step.abs() < 1e-15 * (1.0 + w) {
                break;
            }
        }
        at(w)
    }
}

impl Chart for CapChart {
    fn domain(&self) -> ChartDomain {
        ChartDomain { u: (-self.r_cap, self.r_cap), v: (-self.r_cap, self.r_cap), u_periodic: false, v_periodic: false }
    }

    fn jet(&self, x: f64, y: f64) -> Jet {
        let r = x.hypot(y);
        let q = self.point_at_radius(r);
        let h = q.z;
        let hp = q.dz / q.drho;
        let hpp = (q.ddz * q.drho - q.dz * q.ddrho) / q.drho.powi(3);
        let (qq, c) = if r < 1e-7 * self.r_cap {
            (hpp, 0.0)
        } else {
            let qq = hp / r;
            (qq, (hpp - qq) / (r * r))
        };
        let (hx, hy) = (qq * x, qq * y);
        let (hxx, hxy, hyy) = (qq + c * x * x, c * x * y, qq + c * y * y);
        Jet { x: [x, y, h], xu: [1.0, 0.0, hx], xv: [0.0, 1.0, hy], xuu: [0.0, 0.0, hxx], xuv: [0.0, 0.0, hxy], xvv: [0.0, 0.0, hyy] }
    }

    fn quality(&self, x: f64, y: f64) -> f64 {
        (1.0 - x.hypot(y) / self.r_cap).max(0.0)
    }

    fn invert(&self, p: Vec3) -> Option<(f64, f64)> {
        let l = self.profile.length();
        let mid = self.profile.eval(0.5 * l).z;
        let on_side = if self.top { p[2] > mid } else { p[2] < mid };
        (on_side && p[0].hypot(p[1]) < self.r_cap).then_some((p[0], p[1]))
    }

    fn orientation(&self) -> f64 {
        // (1, 0, h_x) × (0, 1, h_y) has positive z-component.
        if self.top {
            1.0
        } else {
            -1.0
        }
    }
}
