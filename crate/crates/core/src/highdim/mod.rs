//! d-dimensional spherically symmetric manifolds ds² + f(s)² dΩ² on
//! [0, D] and their isodiametric bound A/D^d ≤ |B^d|/2^{d−1}.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::numerics::{adaptive_quadrature, Pchip};
use crate::symmetrize::SymmetricProfile;

/// |S^k|, the area of the unit k-sphere in R^{k+1}.
pub fn sphere_area(k: usize) -> f64 {
    let h = 0.5 * (k as f64 + 1.0);
    2.0 * PI.powf(h) / gamma(h)
}

/// |B^d|, the volume of the unit d-ball.
pub fn ball_volume(d: usize) -> f64 {
    let h = 0.5 * d as f64;
    PI.powf(h) / gamma(h + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Analytic,
    Sampled,
    FromSymmetrize,
}

/// Monotone cubic pieces split at detected corners.
#[derive(Clone)]
struct Sampled {
    s: Vec<f64>,
    f: Vec<f64>,
    ends: Option<(f64, f64)>,
    breaks: Vec<f64>,
    pieces: Vec<Pchip>,
}

/// Interior nodes where the slope jumps far more than at either neighbour.
fn detect_corners(s: &[f64], f: &[f64]) -> Vec<usize> {
    let n = s.len();
    if n < 5 {
        return Vec::new();
    }
    let del: Vec<f64> = (0..n - 1).map(|i| (f[i + 1] - f[i]) / (s[i + 1] - s[i])).collect();
    let jump: Vec<f64> = (1..n - 1).map(|k| (del[k] - del[k - 1]).abs()).collect();
    (1..n - 1)
        .filter(|&k| {
            let j = jump[k - 1];
            let left = if k >= 2 { jump[k - 2] } else { 0.0 };
            let right = if k + 1 < n - 1 { jump[k] } else { 0.0 };
            j > 1e-3 && j > 20.0 * left.max(right)
        })
        .collect()
}

impl Sampled {
    fn new(s: Vec<f64>, f: Vec<f64>, ends: Option<(f64, f64)>) -> Result<Self> {
        let corners = detect_corners(&s, &f);
        let mut cuts = vec![0];
        cuts.extend(&corners);
        cuts.push(s.len() - 1);
        let mut pieces = Vec::with_capacity(cuts.len() - 1);
        for (w, idx) in cuts.windows(2).zip(0..) {
            let mut p = Pchip::new(s[w[0]..=w[1]].to_vec(), f[w[0]..=w[1]].to_vec())?;
            if let Some((a, b)) = ends {
                let last = idx + 2 == cuts.len();
                p = p.with_end_slopes((idx == 0).then_some(a), last.then_some(b));
            }
            pieces.push(p);
        }
        let breaks = corners.iter().map(|&k| s[k]).collect();
        Ok(Self { s, f, ends, breaks, pieces })
    }

    fn piece(&self, t: f64) -> &Pchip {
        &self.pieces[self.breaks.partition_point(|&b| b <= t)]
    }

    fn eval(&self, t: f64) -> f64 {
        self.piece(t).eval(t)
    }
}

#[derive(Clone)]
enum Eval {
    Analytic(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Sampled(Sampled),
}

#[derive(Clone)]
pub struct SphericalProfile {
    pub d: usize,
    pub d_p: f64,
    pub name: String,
    pub provenance: Provenance,
    eval: Eval,
    /// Interior points where f may have a corner; quadrature splits there.
    corners: Vec<f64>,
}

impl fmt::Debug for SphericalProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SphericalProfile")
            .field("d", &self.d)
            .field("d_p", &self.d_p)
            .field("name", &self.name)
            .field("provenance", &self.provenance)
            .finish_non_exhaustive()
    }
}

fn check_shape(d: usize, d_p: f64) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {d}")));
    }
    if !(d_p > 0.0 && d_p.is_finite()) {
        return Err(Error::InvalidParameter(format!("profile length must be positive, got {d_p}")));
    }
    Ok(())
}

impl SphericalProfile {
    pub fn analytic(d: usize, d_p: f64, name: &str, f: impl Fn(f64) -> f64 + Send + Sync + 'static, corners: Vec<f64>) -> Result<Self> {
        check_shape(d, d_p)?;
        Ok(Self { d, d_p, name: name.into(), provenance: Provenance::Analytic, eval: Eval::Analytic(Arc::new(f)), corners })
    }

    /// Round sphere: f = sin on [0, π].
    pub fn sine(d: usize) -> Result<Self> {
        Self::analytic(d, PI, "sin", f64::sin, Vec::new())
    }

    /// a·sin(s/a)·amp on [0, πa]; amp ≠ 1 violates f′(0) = 1.
    pub fn scaled_sine(d: usize, radius: f64, amp: f64) -> Result<Self> {
        Self::analytic(d, PI * radius, "scaled-sin", move |s| amp * radius * (s / radius).sin(), Vec::new())
    }

    /// Two flat d-balls of diameter D glued along their boundaries.
    pub fn double_ball(d: usize, diameter: f64) -> Result<Self> {
        Self::analytic(d, diameter, "double-ball", move |s| s.min(diameter - s), vec![0.5 * diameter])
    }

    /// Monotone cubic through (s, f); s must start at 0 and end at D.
    pub fn from_samples(d: usize, s: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        Self::sampled(d, s, f, None, Provenance::Sampled, "samples")
    }

    /// The 2-dimensional profile produced by symmetrization, optionally
    /// lifted into dimension d.
    pub fn from_symmetric(sp: &SymmetricProfile, d: usize) -> Result<Self> {
        let m = sp.m;
        Self::sampled(d, sp.s.clone(), sp.f.clone(), Some((sp.f_prime[0], sp.f_prime[m])), Provenance::FromSymmetrize, "symmetrized")
    }

    fn sampled(d: usize, s: Vec<f64>, f: Vec<f64>, ends: Option<(f64, f64)>, provenance: Provenance, name: &str) -> Result<Self> {
        let (&s0, &s1) = match (s.first(), s.last()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::InvalidParameter("empty profile samples".into())),
        };
        if s0 != 0.0 {
            return Err(Error::InvalidParameter(format!("profile samples must start at s = 0, got {s0}")));
        }
        check_shape(d, s1)?;
        let sm = Sampled::new(s, f, ends)?;
        let corners = sm.breaks.clone();
        Ok(Self { d, d_p: s1, name: name.into(), provenance, eval: Eval::Sampled(sm), corners })
    }

    pub fn with_dimension(&self, d: usize) -> Result<Self> {
        check_shape(d, self.d_p)?;
        Ok(Self { d, ..self.clone() })
    }

    pub fn f(&self, s: f64) -> f64 {
        match &self.eval {
            Eval::Analytic(f) => f(s),
            Eval::Sampled(sm) => sm.eval(s),
        }
    }

    /// The view from the far pole, f*(s) = f(D − s).
    pub fn reversed(&self) -> Self {
        let d_p = self.d_p;
        let eval = match &self.eval {
            Eval::Analytic(f) => {
                let f = f.clone();
                Eval::Analytic(Arc::new(move |s| f(d_p - s)))
            }
            Eval::Sampled(sm) => {
                let xs: Vec<f64> = sm.s.iter().rev().map(|&v| d_p - v).collect();
                let ys: Vec<f64> = sm.f.iter().rev().copied().collect();
                let ends = sm.ends.map(|(a, b)| (-b, -a));
                Eval::Sampled(Sampled::new(xs, ys, ends).expect("reversed nodes stay increasing"))
            }
        };
        Self { eval, corners: self.corners.iter().rev().map(|&c| d_p - c).collect(), name: format!("{}-reversed", self.name), ..self.clone() }
    }

    /// f′(0) by a second-order one-sided difference, or the interpolant slope.
    pub fn slope_at_zero(&self) -> f64 {
        match &self.eval {
            Eval::Analytic(f) => {
                let h = 1e-5 * self.d_p;
                (-3.0 * f(0.0) + 4.0 * f(h) - f(2.0 * h)) / (2.0 * h)
            }
            Eval::Sampled(sm) => sm.pieces[0].deriv(0.0),
        }
    }

    /// Breakpoints for piecewise quadrature on [a, b].
    fn pieces(&self, a: f64, b: f64) -> Vec<f64> {
        let mut cuts = vec![a];
        let inner: Vec<f64> = match &self.eval {
            Eval::Analytic(_) => self.corners.clone(),
            Eval::Sampled(sm) => sm.s.clone(),
        };
        cuts.extend(inner.into_iter().filter(|&c| c > a && c < b));
        cuts.push(b);
        cuts
    }

    /// ∫_a^b f^{d−1} ds.
    pub fn power_integral(&self, a: f64, b: f64) -> Result<f64> {
        let k = (self.d - 1) as i32;
        let cuts = self.pieces(a, b);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            if w[1] > w[0] {
                total += adaptive_quadrature(|s| self.f(s).powi(k), w[0], w[1], 1e-14)?;
            }
        }
        Ok(total)
    }
}

/// Profile invariants that do not depend on embeddability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileInvariants {
    pub f0: f64,
    pub f_end: f64,
    pub min_interior: f64,
    pub slope_at_zero: f64,
    pub ok: bool,
}

pub fn profile_invariants(sp: &SphericalProfile) -> ProfileInvariants {
    let n = 4096;
    let min_interior = (1..n).map(|i| sp.f(sp.d_p * i as f64 / n as f64)).fold(f64::INFINITY, f64::min);
    let f0 = sp.f(0.0);
    let slope = sp.slope_at_zero();
    ProfileInvariants {
        f0,
        f_end: sp.f(sp.d_p),
        min_interior,
        slope_at_zero: slope,
        ok: f0.abs() < 1e-12 && min_interior > 0.0 && (slope - 1.0).abs() <= 1e-6,
    }
}

/// A = |S^{d−1}| ∫₀^D f^{d−1}.
pub fn volume_highdim(sp: &SphericalProfile) -> Result<f64> {
    Ok(sphere_area(sp.d - 1) * sp.power_integral(0.0, sp.d_p)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Embeddability {
    pub pass: bool,
    pub max_slope: f64,
    /// Left end of the steepest difference interval.
    pub at: f64,
}

/// |f′| ≤ 1 + 1e-6 by forward differences on a fine grid.
pub fn embeddability_check(sp: &SphericalProfile) -> Embeddability {
    let n = 8192;
    let h = sp.d_p / n as f64;
    let mut prev = sp.f(0.0);
    let (mut max_slope, mut at) = (0.0f64, 0.0);
    for i in 1..=n {
        let cur = sp.f(h * i as f64);
        let slope = ((cur - prev) / h).abs();
        if slope > max_slope {
            max_slope = slope;
            at = h * (i - 1) as f64;
        }
        prev = cur;
    }
    Embeddability { pass: max_slope <= 1.0 + 1e-6, max_slope, at }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HighdimBound {
    pub d: usize,
    pub volume: f64,
    pub diameter: f64,
    pub ratio: f64,
    /// |B^d| / 2^{d−1}
    pub bound: f64,
    pub slack: f64,
    pub embeddable: bool,
    pub pass: bool,
}

/// A/D^d ≤ |B^d|/2^{d−1} with D = D_p, the distance between the poles.
/// Fails outright when the embeddability hypothesis fails.
pub fn bound_check_highdim(sp: &SphericalProfile) -> Result<HighdimBound> {
    let volume = volume_highdim(sp)?;
    let ratio = volume / sp.d_p.powi(sp.d as i32);
    let bound = ball_volume(sp.d) / 2f64.powi(sp.d as i32 - 1);
    let slack = bound - ratio;
    let embeddable = embeddability_check(sp).pass;
    Ok(HighdimBound { d: sp.d, volume, diameter: sp.d_p, ratio, bound, slack, embeddable, pass: embeddable && slack >= -1e-8 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSplit {
    pub south: f64,
    pub north: f64,
    /// (D/2)^d / d
    pub bound: f64,
    pub pass: bool,
}

/// Both half-integrals of f^{d−1} against ∫₀^{D/2} s^{d−1} ds, using f ≤ s
/// from each pole.
pub fn half_split_certificate(sp: &SphericalProfile) -> Result<HalfSplit> {
    let half = 0.5 * sp.d_p;
    let south = sp.power_integral(0.0, half)?;
    let north = sp.reversed().power_integral(0.0, half)?;
    let bound = half.powi(sp.d as i32) / sp.d as f64;
    Ok(HalfSplit { south, north, bound, pass: south <= bound + 1e-8 && north <= bound + 1e-8 })
}
