//! Rotationally symmetric comparison profile f_p built from a cut profile,
//! its area, boundary circle, embedding, Fermi Jacobian and the bound chain.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutlocus::CutProfile;
use crate::error::{Error, Result};
use crate::geodesic::GeodesicTrace;
use crate::numerics::{adaptive_quadrature, cumulative_integral, integrate, CubicSpline, DenseTrajectory, FnSystem, OdeProblem};

/// Boundary circles shorter than this count as closed (f(D_p) = 0).
pub const CLOSED_BOUNDARY: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizeOptions {
    /// Number of s-intervals on [0, D_p]; must be even.
    pub m: usize,
    /// Threshold for |f″ + k f| on the grid.
    pub residual_tol: f64,
    pub quad_tol: f64,
}

impl Default for SymmetrizeOptions {
    fn default() -> Self {
        Self { m: 1024, residual_tol: 1e-4, quad_tol: 1e-11 }
    }
}

/// Evaluates f and ∫f at arbitrary s from the trace dense output.
struct Source {
    traces: Vec<Arc<GeodesicTrace>>,
    /// d(θ_i) / D_p
    ratio: Vec<f64>,
}

impl Source {
    fn f(&self, s: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (tr, &r) in self.traces.iter().zip(&self.ratio) {
            acc += tr.jacobian_at((r * s).min(tr.t_max))? / r;
        }
        Ok(acc / self.traces.len() as f64)
    }

    /// (f, k f, f′) at s.
    fn jet(&self, s: f64) -> Result<(f64, f64, f64)> {
        let (mut f, mut kf, mut fd) = (0.0, 0.0, 0.0);
        for (tr, &r) in self.traces.iter().zip(&self.ratio) {
            let t = (r * s).min(tr.t_max);
            let (_, y) = tr.state_at(t)?;
            let k = tr.gauss_at(t)?;
            f += y[crate::geodesic::IDX_F] / r;
            kf += r * k * y[crate::geodesic::IDX_F];
            fd += y[crate::geodesic::IDX_FDOT];
        }
        let n = self.traces.len() as f64;
        Ok((f / n, kf / n, fd / n))
    }
}

#[derive(Clone)]
pub struct SymmetricProfile {
    pub d_p: f64,
    pub m: usize,
    pub s: Vec<f64>,
    pub f: Vec<f64>,
    pub k: Vec<f64>,
    pub kf: Vec<f64>,
    /// 1 − ∫₀ˢ k f.
    pub f_prime: Vec<f64>,
    /// θ-average of Ḟ at the rescaled times; independent of `f_prime`.
    pub f_prime_direct: Vec<f64>,
    pub a_p: f64,
    /// Σ_θ (D_p/d)² ∫₀ᵈ F dt Δθ.
    pub a_p_weighted: f64,
    pub l_p: f64,
    pub m_p: f64,
    pub rho_p: f64,
    pub cut_length: f64,
    pub residual_max: f64,
    pub residual_ok: bool,
    pub opts: SymmetrizeOptions,
    source: Arc<Source>,
}

impl std::fmt::Debug for SymmetricProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymmetricProfile")
            .field("d_p", &self.d_p)
            .field("m", &self.m)
            .field("a_p", &self.a_p)
            .field("l_p", &self.l_p)
            .field("m_p", &self.m_p)
            .finish_non_exhaustive()
    }
}

pub fn build(profile: &CutProfile, m: usize) -> Result<SymmetricProfile> {
    build_with(profile, &SymmetrizeOptions { m, ..SymmetrizeOptions::default() })
}

pub fn build_with(profile: &CutProfile, opts: &SymmetrizeOptions) -> Result<SymmetricProfile> {
    let m = opts.m;
    if m < 16 || !m.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("m must be even and at least 16, got {m}")));
    }
    let d_p = profile.d_p;
    for (r, tr) in profile.rays.iter().zip(&profile.traces) {
        if tr.t_max + 1e-12 < r.d {
            return Err(Error::Build(format!("trace at theta = {} ends at {} before its cut time {}", r.theta, tr.t_max, r.d)));
        }
    }
    let source = Arc::new(Source { traces: profile.traces.clone(), ratio: profile.rays.iter().map(|r| r.d / d_p).collect() });
    let h = d_p / m as f64;
    let s: Vec<f64> = (0..=m).map(|j| j as f64 * h).collect();
    let jets: Vec<(f64, f64, f64)> = s.par_iter().map(|&sj| source.jet(sj)).collect::<Result<_>>()?;
    let f: Vec<f64> = jets.iter().map(|j| j.0).collect();
    let kf: Vec<f64> = jets.iter().map(|j| j.1).collect();
    let f_prime_direct: Vec<f64> = jets.iter().map(|j| j.2).collect();

    let mut k = vec![0.0; m + 1];
    k[0] = profile.base.geometry().gauss;
    for j in 1..=m {
        k[j] = if f[j] > 1e-10 { kf[j] / f[j] } else { 2.0 * k[j - 1] - k[j - 2] };
    }
    let f_prime: Vec<f64> = cumulative_integral(&kf, h).into_iter().map(|c| 1.0 - c).collect();

    let mut residual_max: f64 = 0.0;
    let raw: Vec<f64> = (1..m).map(|j| (f[j + 1] - 2.0 * f[j] + f[j - 1]) / (h * h) + kf[j]).collect();
    for w in raw.windows(3) {
        residual_max = residual_max.max(((w[0] + w[1] + w[2]) / 3.0).abs());
    }

    let src = source.clone();
    let a_p = 2.0 * PI * adaptive_quadrature(|x| src.f(x).unwrap_or(f64::NAN), 0.0, d_p, opts.quad_tol * d_p)?;
    let weighted: f64 =
        profile.rays.iter().zip(&profile.traces).map(|(r, tr)| Ok((d_p / r.d).powi(2) * tr.area_at(r.d)?)).sum::<Result<f64>>()? * profile.step();
    if ((a_p - weighted) / a_p).abs() > 1e-2 {
        return Err(Error::Consistency { what: "A_p against its weighted 2-D form".into(), value: a_p, expected: weighted });
    }
    let l_p = 2.0 * PI * f[m];
    Ok(SymmetricProfile {
        d_p,
        m,
        s,
        f,
        k,
        kf,
        f_prime,
        f_prime_direct,
        a_p,
        a_p_weighted: weighted,
        l_p,
        m_p: profile.m_p,
        rho_p: profile.rho_p,
        cut_length: profile.cut_length,
        residual_max,
        residual_ok: residual_max < opts.residual_tol,
        opts: *opts,
        source,
    })
}

impl SymmetricProfile {
    pub fn step(&self) -> f64 {
        self.d_p / self.m as f64
    }

    /// f at any s in [0, D_p], from the traces.
    pub fn f_at(&self, s: f64) -> Result<f64> {
        if !(0.0..=self.d_p).contains(&s) {
            return Err(Error::OutOfRange { what: "s", value: s, lo: 0.0, hi: self.d_p });
        }
        self.source.f(s)
    }

    fn integral_f(&self, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        adaptive_quadrature(|x| self.source.f(x).unwrap_or(f64::NAN), a, b, self.opts.quad_tol * self.d_p)
    }

    /// f(D_p) below `CLOSED_BOUNDARY`: the comparison surface closes up.
    pub fn closed(&self) -> bool {
        self.f[self.m] < CLOSED_BOUNDARY
    }

    pub fn f_prime_end(&self) -> f64 {
        self.f_prime[self.m]
    }
}

pub fn area_sym(sp: &SymmetricProfile) -> f64 {
    sp.a_p
}

/// 2π ∫ k f ds.
pub fn total_curvature_sym(sp: &SymmetricProfile) -> Result<f64> {
    let tc = 2.0 * PI * crate::numerics::simpson(&sp.kf, sp.step());
    if ((tc - 4.0 * PI) / (4.0 * PI)).abs() > 1e-2 {
        return Err(Error::Consistency { what: "symmetrized total curvature".into(), value: tc, expected: 4.0 * PI });
    }
    Ok(tc)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSample {
    pub s: f64,
    pub r: f64,
    pub z: f64,
}

/// Meridian (r, z) = (f, ∫√(1 − f′²)) of the comparison surface.
pub fn embedding(sp: &SymmetricProfile) -> Result<Vec<EmbeddingSample>> {
    let max_slope = sp.f_prime.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if max_slope > 1.0 + 1e-6 {
        return Err(Error::Embeddability { max_slope });
    }
    let dz: Vec<f64> = sp.f_prime.iter().map(|&v| (1.0 - v * v).max(0.0).sqrt()).collect();
    let z = cumulative_integral(&dz, sp.step());
    Ok(sp.s.iter().zip(&sp.f).zip(z).map(|((&s, &r), z)| EmbeddingSample { s, r, z }).collect())
}

/// L_p = 2π f(D_p), checked against D_p M_p.
pub fn boundary_length(sp: &SymmetricProfile) -> Result<f64> {
    let want = sp.d_p * sp.m_p;
    if (sp.l_p - want).abs() > 1e-3 * sp.l_p.max(1.0) {
        return Err(Error::Consistency { what: "L_p = D_p M_p".into(), value: sp.l_p, expected: want });
    }
    Ok(sp.l_p)
}

/// (A1, A2) = 2π (∫₀^τ f, ∫_τ^{D_p} f).
pub fn area_split(sp: &SymmetricProfile, tau: f64) -> Result<(f64, f64)> {
    if !(tau > 0.0 && tau <= sp.d_p) {
        return Err(Error::OutOfRange { what: "tau", value: tau, lo: 0.0, hi: sp.d_p });
    }
    Ok((2.0 * PI * sp.integral_f(0.0, tau)?, 2.0 * PI * sp.integral_f(tau, sp.d_p)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    pub tau: f64,
    pub ok1: bool,
    pub ok2: bool,
    /// π τ² − A1
    pub slack1: f64,
    /// π (D_p − τ)² + L_p (D_p − τ) − A2
    pub slack2: f64,
}

pub fn lemma_checks(sp: &SymmetricProfile, tau: f64) -> Result<LemmaCheck> {
    let (a1, a2) = area_split(sp, tau)?;
    let rest = sp.d_p - tau;
    let slack1 = PI * tau * tau - a1;
    let slack2 = PI * rest * rest + sp.l_p * rest - a2;
    Ok(LemmaCheck { tau, ok1: slack1 >= -1e-8, ok2: slack2 >= -1e-8, slack1, slack2 })
}

/// h(r) on the Fermi coordinate r ∈ [0, D_p] measured inward from the
/// boundary circle.
#[derive(Debug, Clone)]
pub struct FermiJacobian {
    /// Geodesic curvature of the boundary circle, f′(D_p)/f(D_p).
    pub kappa: f64,
    pub r: Vec<f64>,
    pub h: Vec<f64>,
    /// max |h(r) − f(D_p − r)/f(D_p)| on the grid.
    pub identity_error: f64,
    /// max of h(r) − (1 − κ r); should be ≤ 1e-8.
    pub comparison_excess: f64,
    l_p: f64,
    traj: DenseTrajectory,
}

impl FermiJacobian {
    /// A2(τ) = L_p ∫₀^{D_p − τ} h dr.
    pub fn a2(&self, tau: f64) -> Result<f64> {
        let r = self.traj.t_end() - tau;
        Ok(self.l_p * self.traj.eval_component(r.clamp(0.0, self.traj.t_end()), 2)?)
    }
}

/// Solves h″ + k(D_p − r) h = 0, h(0) = 1, h′(0) = −κ. `None` when the
/// boundary circle is degenerate.
pub fn fermi_jacobian(sp: &SymmetricProfile) -> Result<Option<FermiJacobian>> {
    let m = sp.m;
    let f_end = sp.f[m];
    if f_end <= CLOSED_BOUNDARY {
        return Ok(None);
    }
    let kappa = sp.f_prime[m] / f_end;
    let spline = CubicSpline::new(sp.s.clone(), sp.k.clone())?;
    let d_p = sp.d_p;
    let sys = FnSystem::new(3, move |r: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = -spline.eval((d_p - r).clamp(0.0, d_p)) * y[0];
        dy[2] = y[0];
    });
    let prob = OdeProblem::new(&sys);
    let traj = integrate(&prob, &[1.0, -kappa, 0.0], 0.0, d_p)?;
    let mut r = Vec::with_capacity(m + 1);
    let mut h = Vec::with_capacity(m + 1);
    let (mut identity_error, mut comparison_excess) = (0.0f64, f64::NEG_INFINITY);
    for j in 0..=m {
        let rj = sp.s[j];
        let hj = traj.eval_component(rj, 0)?;
        identity_error = identity_error.max((hj - sp.f[m - j] / f_end).abs());
        comparison_excess = comparison_excess.max(hj - (1.0 - kappa * rj));
        r.push(rj);
        h.push(hj);
    }
    Ok(Some(FermiJacobian { kappa, r, h, identity_error, comparison_excess, l_p: sp.l_p, traj }))
}

/// Global quantities a bound evaluation needs besides the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub area: f64,
    pub diameter: f64,
    pub inj: f64,
    pub cut_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub pass: bool,
}

impl Link {
    pub fn le(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = rhs - lhs;
        Self { name: name.to_string(), lhs, rhs, slack, pass: slack >= -tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub tau_min: f64,
    pub ratio: f64,
    pub ratio_p: f64,
    /// π/2 + ½ M_p (1 − M_p/4π)
    pub strong: f64,
    /// π/2 + |Cut_p|/inj
    pub main_inj: f64,
    /// π/2 + |Cut_p|/ρ_p
    pub main_rho: f64,
    /// π/2 + 2|Cut_p|/ρ_p
    pub crude_rho: f64,
    pub links: Vec<Link>,
    pub lemma_tau_min: LemmaCheck,
    pub lemma_grid: Vec<LemmaCheck>,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.links.iter().all(|l| l.pass) && self.lemma_grid.iter().chain([&self.lemma_tau_min]).all(|c| c.ok1 && c.ok2)
    }
}

fn quadratic(sp: &SymmetricProfile, tau: f64) -> f64 {
    let rest = sp.d_p - tau;
    PI * tau * tau + PI * rest * rest + sp.l_p * rest
}

/// Strong bound B_s = π/2 + ½ M (1 − M/4π).
pub fn strong_bound(m_p: f64) -> f64 {
    0.5 * PI + 0.5 * m_p * (1.0 - m_p / (4.0 * PI))
}

pub fn bounds(sp: &SymmetricProfile, inputs: &BoundInputs) -> Result<BoundReport> {
    if !(inputs.inj > 0.0) {
        return Err(Error::InvalidParameter(format!("inj must be positive, got {}", inputs.inj)));
    }
    let d_p = sp.d_p;
    let tau_min = 0.5 * d_p + sp.l_p / (4.0 * PI);
    let ratio = inputs.area / (inputs.diameter * inputs.diameter);
    let ratio_p = sp.a_p / (d_p * d_p);
    let strong = strong_bound(sp.m_p);
    let main_inj = 0.5 * PI + inputs.cut_length / inputs.inj;
    let main_rho = 0.5 * PI + inputs.cut_length / sp.rho_p;
    let crude_rho = 0.5 * PI + 2.0 * inputs.cut_length / sp.rho_p;
    let tol = 1e-6;
    let q_min = quadratic(sp, tau_min.min(d_p));
    let links = vec![
        Link::le("tau_min_positive", 0.0, tau_min, 0.0),
        Link::le("tau_min_le_D_p", tau_min, d_p, 1e-12),
        Link::le("A_le_A_p", inputs.area, sp.a_p, 1e-6 * inputs.area),
        Link::le("D_p_le_D", d_p, inputs.diameter, 1e-8),
        Link::le("ratio_le_ratio_p", ratio, ratio_p, tol),
        Link::le("ratio_p_le_strong", ratio_p, strong, tol),
        Link::le("strong_le_main_rho", strong, main_rho, tol),
        Link::le("main_rho_le_main_inj", main_rho, main_inj, tol),
        Link::le("strong_le_main_inj", strong, main_inj, tol),
        Link::le("strong_le_crude_rho", strong, crude_rho, tol),
        Link::le("M_p_le_2pi", sp.m_p, 2.0 * PI, 1e-6),
        Link::le("L_p_le_2pi_D_p", sp.l_p, 2.0 * PI * d_p, 1e-6),
        Link::le("quadratic_min_le_half", q_min, quadratic(sp, 0.5 * d_p), 1e-9),
        Link::le("quadratic_min_le_end", q_min, quadratic(sp, d_p), 1e-9),
    ];
    let lemma_tau_min = lemma_checks(sp, tau_min.clamp(f64::MIN_POSITIVE, d_p))?;
    let lemma_grid = (1..=10).map(|i| lemma_checks(sp, d_p * i as f64 / 10.0)).collect::<Result<_>>()?;
    Ok(BoundReport { tau_min, ratio, ratio_p, strong, main_inj, main_rho, crude_rho, links, lemma_tau_min, lemma_grid })
}
