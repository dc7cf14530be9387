//! Global invariants (A, D, inj, total curvature) and the assembled ratio
//! report over a set of candidate base points.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutlocus::{classify_cut_points, compute_cut_profile_with, intrinsic_area_from_profile, CutOptions, CutPointKind, CutProfile};
use crate::error::{Error, Result};
use crate::geodesic::IDX_F;
use crate::surface::{ellipsoid_umbilics, norm, sub, BasePoint, ParametricSurface, SurfaceDescriptor, SurfaceKind, Vec3};
use crate::symmetrize::{self, BoundInputs, BoundReport, FermiJacobian, SymmetricProfile, SymmetrizeOptions};

/// A named base-point candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub label: String,
    pub point: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    /// Profile evaluations allowed for each of the D and inj searches; 0
    /// disables refinement.
    pub max_evals: usize,
    /// Initial step in chart coordinates.
    pub step: f64,
    pub min_step: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self { max_evals: 0, step: 0.05, min_step: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    pub cut: CutOptions,
    pub sym: SymmetrizeOptions,
    /// Side of the chart grid of extra candidates; 0 for none.
    pub grid: usize,
    pub refine: RefineOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self { cut: CutOptions::default(), sym: SymmetrizeOptions::default(), grid: 6, refine: RefineOptions::default() }
    }
}

fn push_unique(out: &mut Vec<Candidate>, label: String, p: Vec3) {
    if !out.iter().any(|c| norm(sub(c.point, p)) < 1e-9) {
        out.push(Candidate { label, point: p });
    }
}

/// Axis endpoints, umbilics and a chart grid, reduced by the symmetries of
/// the surface.
pub fn candidate_points(surface: &ParametricSurface, grid: usize) -> Vec<Candidate> {
    let mut out = Vec::new();
    match surface.kind() {
        SurfaceKind::Sphere { r } => {
            // Homogeneous: one point stands for all.
            out.push(Candidate { label: "pole_z".into(), point: [0.0, 0.0, *r] });
            return out;
        }
        SurfaceKind::Ellipsoid { a, b, c } => {
            let (a, b, c) = (*a, *b, *c);
            push_unique(&mut out, "axis_x".into(), [a, 0.0, 0.0]);
            if b != a {
                push_unique(&mut out, "axis_y".into(), [0.0, b, 0.0]);
            }
            if c != b {
                push_unique(&mut out, "axis_z".into(), [0.0, 0.0, c]);
            }
            if a > b && b > c {
                let u = ellipsoid_umbilics(a, b, c).into_iter().find(|p| p[0] > 0.0 && p[2] > 0.0).expect("umbilic in the positive quadrant");
                push_unique(&mut out, "umbilic".into(), u);
            }
        }
        SurfaceKind::Revolution { .. } => {
            let n = surface.charts().len();
            if n >= 3 {
                push_unique(&mut out, "pole_top".into(), surface.position(2, 0.0, 0.0));
                if !surface.reflection_symmetric() {
                    push_unique(&mut out, "pole_bottom".into(), surface.position(1, 0.0, 0.0));
                }
            }
        }
        SurfaceKind::Custom { .. } => {}
    }
    if grid == 0 {
        return out;
    }
    let chart = surface.chart(0);
    let dom = chart.domain();
    let (u0, u1) = dom.u;
    let (v0, v1) = dom.v;
    for i in 0..grid {
        let u = u0 + (u1 - u0) * (i as f64 + 0.5) / grid as f64;
        for j in 0..grid {
            let v = if dom.v_periodic { v0 + (v1 - v0) * j as f64 / grid as f64 } else { v0 + (v1 - v0) * (j as f64 + 0.5) / grid as f64 };
            let mut p = chart.jet(u, v).x;
            if surface.axisymmetric() {
                // Only the distance to the axis and the height matter.
                p = [p[0].hypot(p[1]), 0.0, p[2]];
            }
            if surface.reflection_symmetric() {
                p = [p[0].abs(), p[1].abs(), p[2].abs()];
            }
            push_unique(&mut out, format!("grid_{i}_{j}"), p);
        }
    }
    out
}

/// Everything computed from one base point.
#[derive(Debug, Clone)]
pub struct PointAnalysis {
    pub candidate: Candidate,
    pub profile: CutProfile,
    pub sym: SymmetricProfile,
    pub area: f64,
    pub fermi: Option<FermiJacobian>,
    /// max over trace breakpoints of F − t.
    pub comparison_excess: f64,
}

pub fn analyze_point(surface: &ParametricSurface, cand: &Candidate, opts: &AnalysisOptions) -> Result<PointAnalysis> {
    let base = BasePoint::at_point(surface, cand.point)?;
    let profile = compute_cut_profile_with(&base, &opts.cut)?;
    analyze_profile(cand, profile, opts)
}

/// The per-point pipeline after the cut profile is known.
pub fn analyze_profile(cand: &Candidate, profile: CutProfile, opts: &AnalysisOptions) -> Result<PointAnalysis> {
    let area = intrinsic_area(&profile)?;
    let sym = symmetrize::build_with(&profile, &opts.sym)?;
    let fermi = symmetrize::fermi_jacobian(&sym)?;
    let comparison_excess =
        profile.traces.iter().flat_map(|tr| tr.breakpoints().map(|(_, t, y)| y[IDX_F] - t).collect::<Vec<_>>()).fold(f64::NEG_INFINITY, f64::max);
    Ok(PointAnalysis { candidate: cand.clone(), profile, sym, area, fermi, comparison_excess })
}

/// ∫∫_{U_p} F dt dθ.
pub fn intrinsic_area(profile: &CutProfile) -> Result<f64> {
    intrinsic_area_from_profile(profile)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refinement {
    pub evals: usize,
    pub start_value: f64,
    pub final_value: f64,
    pub final_point: Vec3,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiameterResult {
    pub value: f64,
    pub witness: String,
    pub witness_point: Vec3,
    /// Initial angle of the ray reaching the farthest cut point.
    pub witness_theta: f64,
    pub certified: String,
    pub refinement: Option<Refinement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjResult {
    pub value: f64,
    pub witness: String,
    pub witness_point: Vec3,
    pub certified: String,
    pub refinement: Option<Refinement>,
}

/// Step-halving coordinate search on the base point; `sign` = +1 maximizes
/// D_p, −1 minimizes ρ_p.
fn hill_climb(surface: &ParametricSurface, start: Vec3, start_value: f64, sign: f64, opts: &AnalysisOptions) -> Option<Refinement> {
    let r = opts.refine;
    if r.max_evals == 0 {
        return None;
    }
    let (chart, mut u, mut v, _) = surface.best_chart(start)?;
    let value = |u: f64, v: f64| -> Option<f64> {
        let b = BasePoint::new(surface, chart, u, v).ok()?;
        let p = compute_cut_profile_with(&b, &opts.cut).ok()?;
        Some(if sign > 0.0 { p.d_p } else { p.rho_p })
    };
    let mut best = start_value;
    let mut h = r.step;
    let mut evals = 0;
    while evals < r.max_evals && h > r.min_step {
        let mut moved = false;
        for (du, dv) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            if evals >= r.max_evals {
                break;
            }
            evals += 1;
            if let Some(val) = value(u + du, v + dv) {
                if sign * (val - best) > 1e-12 {
                    best = val;
                    u += du;
                    v += dv;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    Some(Refinement { evals, start_value, final_value: best, final_point: surface.position(chart, u, v), converged: h <= r.min_step })
}

/// D = max D_p over the analysed points, optionally refined by local ascent.
pub fn diameter(surface: &ParametricSurface, points: &[PointAnalysis], opts: &AnalysisOptions) -> Result<DiameterResult> {
    let best = points
        .iter()
        .max_by(|a, b| a.profile.d_p.total_cmp(&b.profile.d_p))
        .ok_or_else(|| Error::InvalidParameter("diameter needs at least one candidate".into()))?;
    let d = &best.profile.d;
    let i = (0..d.n()).max_by(|&a, &b| d.values()[a].total_cmp(&d.values()[b])).unwrap_or(0);
    let refinement = hill_climb(surface, best.candidate.point, best.profile.d_p, 1.0, opts);
    let value = refinement.as_ref().map_or(best.profile.d_p, |r| r.final_value.max(best.profile.d_p));
    Ok(DiameterResult {
        value,
        witness: best.candidate.label.clone(),
        witness_point: best.candidate.point,
        witness_theta: d.theta(i),
        certified: "lower_bound".into(),
        refinement,
    })
}

/// inj = min ρ_p over the analysed points, optionally refined by descent.
pub fn injectivity_radius(surface: &ParametricSurface, points: &[PointAnalysis], opts: &AnalysisOptions) -> Result<InjResult> {
    let best = points
        .iter()
        .min_by(|a, b| a.profile.rho_p.total_cmp(&b.profile.rho_p))
        .ok_or_else(|| Error::InvalidParameter("injectivity radius needs at least one candidate".into()))?;
    let refinement = hill_climb(surface, best.candidate.point, best.profile.rho_p, -1.0, opts);
    let value = refinement.as_ref().map_or(best.profile.rho_p, |r| r.final_value.min(best.profile.rho_p));
    Ok(InjResult { value, witness: best.candidate.label.clone(), witness_point: best.candidate.point, certified: "upper_bound".into(), refinement })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    /// Positive when the inequality holds with room to spare.
    pub slack: f64,
}

impl Verdict {
    fn le(lhs: f64, rhs: f64, tol: f64) -> Self {
        let slack = rhs - lhs;
        Self { pass: slack >= -tol, slack }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub label: String,
    pub point: Vec3,
    pub error: Option<String>,
    pub d_p: Option<f64>,
    pub rho_p: Option<f64>,
    pub cut_length: Option<f64>,
    pub m_p: Option<f64>,
    pub area: Option<f64>,
    pub a_p: Option<f64>,
    pub l_p: Option<f64>,
    pub f_prime_end: Option<f64>,
    pub total_curvature_sym: Option<f64>,
    pub residual_max: Option<f64>,
    pub fermi_identity_error: Option<f64>,
    /// Counts per cut-point kind.
    pub cut_point_kinds: BTreeMap<String, usize>,
    pub bounds: Option<BoundReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjectureVerdict {
    pub ratio: f64,
    pub bound: f64,
    pub pass: bool,
    /// Base point whose strong bound equals π/2, certifying the ratio.
    pub certified_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub surface: SurfaceDescriptor,
    pub area: f64,
    pub area_extrinsic: f64,
    pub total_curvature: f64,
    pub diameter: DiameterResult,
    pub inj: InjResult,
    pub ratio: f64,
    pub points: Vec<PointRecord>,
    pub verdicts: BTreeMap<String, Verdict>,
    pub conjecture: ConjectureVerdict,
    pub notes: Vec<String>,
}

impl RatioReport {
    pub fn all_pass(&self) -> bool {
        self.verdicts.values().all(|v| v.pass)
    }

    pub fn has_point_failures(&self) -> bool {
        self.points.iter().any(|p| p.error.is_some())
    }
}

fn kind_name(k: CutPointKind) -> &'static str {
    match k {
        CutPointKind::Conjugate => "conjugate",
        CutPointKind::Cleave => "cleave",
        CutPointKind::BranchCandidate => "branch_candidate",
        CutPointKind::Unresolved => "unresolved",
    }
}

fn merge(verdicts: &mut BTreeMap<String, Verdict>, name: &str, v: Verdict) {
    verdicts
        .entry(name.to_string())
        .and_modify(|e| {
            e.pass &= v.pass;
            e.slack = e.slack.min(v.slack);
        })
        .or_insert(v);
}

/// Full pipeline over the candidates with default options.
pub fn assemble_report(surface: &ParametricSurface, candidates: &[Candidate]) -> Result<RatioReport> {
    assemble_report_with(surface, candidates, &AnalysisOptions::default())
}

pub fn assemble_report_with(surface: &ParametricSurface, candidates: &[Candidate], opts: &AnalysisOptions) -> Result<RatioReport> {
    if candidates.is_empty() {
        return Err(Error::InvalidParameter("no base-point candidates".into()));
    }
    let results: Vec<Result<PointAnalysis>> = candidates.par_iter().map(|c| analyze_point(surface, c, opts)).collect();
    report_from_analyses(surface, candidates, &results, opts)
}

/// Assembles the report from per-point results (some may have failed).
pub fn report_from_analyses(
    surface: &ParametricSurface,
    candidates: &[Candidate],
    results: &[Result<PointAnalysis>],
    opts: &AnalysisOptions,
) -> Result<RatioReport> {
    if results.len() != candidates.len() {
        return Err(Error::InvalidParameter("one result per candidate expected".into()));
    }
    let ok: Vec<PointAnalysis> = results.iter().filter_map(|r| r.as_ref().ok().cloned()).collect();
    if ok.is_empty() {
        let first = results.iter().find_map(|r| r.as_ref().err().cloned()).unwrap_or(Error::DistanceOracle);
        return Err(first);
    }
    let area_extrinsic = surface.extrinsic_area()?;
    let total_curvature = surface.total_curvature()?;
    let area = ok[0].area;
    let diam = diameter(surface, &ok, opts)?;
    let inj = injectivity_radius(surface, &ok, opts)?;
    let ratio = area / (diam.value * diam.value);

    let mut verdicts = BTreeMap::new();
    let four_pi = 4.0 * PI;
    merge(&mut verdicts, "total_curvature", Verdict::le((total_curvature - four_pi).abs(), 1e-3 * four_pi, 0.0));
    merge(&mut verdicts, "area_agreement", Verdict::le(((area - area_extrinsic) / area_extrinsic).abs(), 1e-3, 0.0));

    let mut points = Vec::with_capacity(candidates.len());
    let mut certified_by: Option<(String, f64)> = None;
    for (cand, res) in candidates.iter().zip(results) {
        let pa = match res {
            Ok(pa) => pa,
            Err(e) => {
                points.push(PointRecord {
                    label: cand.label.clone(),
                    point: cand.point,
                    error: Some(e.to_string()),
                    d_p: None,
                    rho_p: None,
                    cut_length: None,
                    m_p: None,
                    area: None,
                    a_p: None,
                    l_p: None,
                    f_prime_end: None,
                    total_curvature_sym: None,
                    residual_max: None,
                    fermi_identity_error: None,
                    cut_point_kinds: BTreeMap::new(),
                    bounds: None,
                });
                continue;
            }
        };
        let (prof, sp) = (&pa.profile, &pa.sym);
        let mut error = None;
        let tc_sym = match symmetrize::total_curvature_sym(sp) {
            Ok(v) => Some(v),
            Err(e) => {
                error = Some(e.to_string());
                None
            }
        };
        let bounds = match symmetrize::bounds(sp, &BoundInputs { area, diameter: diam.value, inj: inj.value, cut_length: prof.cut_length }) {
            Ok(b) => Some(b),
            Err(e) => {
                error = Some(e.to_string());
                None
            }
        };

        merge(&mut verdicts, "area_base_point_independence", Verdict::le(((pa.area - area) / area).abs(), 1e-3, 0.0));
        merge(&mut verdicts, "comparison_F_le_t", Verdict::le(pa.comparison_excess, 0.0, 1e-8));
        let f_excess = sp.f.iter().zip(&sp.s).map(|(f, s)| f - s).fold(f64::NEG_INFINITY, f64::max);
        merge(&mut verdicts, "comparison_f_le_s", Verdict::le(f_excess, 0.0, 1e-8));
        merge(&mut verdicts, "M_p_le_2cut_over_rho", Verdict::le(prof.m_p, 2.0 * prof.cut_length / prof.rho_p, 1e-6));
        merge(&mut verdicts, "M_p_le_2cut_over_inj", Verdict::le(prof.m_p, 2.0 * prof.cut_length / inj.value, 1e-6));
        merge(&mut verdicts, "inj_le_rho_p", Verdict::le(inj.value, prof.rho_p, 0.0));
        // Ḟ averaged directly; the integrated f′ drifts by its quadrature error near D_p.
        let slope = sp.f_prime_direct.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        merge(&mut verdicts, "embeddability", Verdict::le(slope, 1.0, 1e-6));
        merge(&mut verdicts, "f_prime_end", Verdict::le((sp.f_prime_end() + 1.0).abs(), 1e-2, 0.0));
        merge(&mut verdicts, "L_p_identity", Verdict::le((sp.l_p - sp.d_p * sp.m_p).abs(), 1e-3 * sp.l_p.max(1.0), 0.0));
        if let Some(tc) = tc_sym {
            merge(&mut verdicts, "total_curvature_sym", Verdict::le((tc - four_pi).abs(), 1e-3 * four_pi, 0.0));
        } else {
            merge(&mut verdicts, "total_curvature_sym", Verdict { pass: false, slack: f64::NEG_INFINITY });
        }
        if let Some(fj) = &pa.fermi {
            merge(&mut verdicts, "fermi_identity", Verdict::le(fj.identity_error, 1e-4, 0.0));
            merge(&mut verdicts, "fermi_comparison", Verdict::le(fj.comparison_excess, 0.0, 1e-8));
        }
        match &bounds {
            Some(b) => {
                for l in &b.links {
                    merge(&mut verdicts, &l.name, Verdict { pass: l.pass, slack: l.slack });
                }
                for c in b.lemma_grid.iter().chain([&b.lemma_tau_min]) {
                    merge(&mut verdicts, "lemma_inner_area", Verdict { pass: c.ok1, slack: c.slack1 });
                    merge(&mut verdicts, "lemma_outer_area", Verdict { pass: c.ok2, slack: c.slack2 });
                }
                if b.strong <= 0.5 * PI + 1e-6 && certified_by.as_ref().is_none_or(|(_, s)| b.strong < *s) {
                    certified_by = Some((cand.label.clone(), b.strong));
                }
            }
            None => merge(&mut verdicts, "bound_chain", Verdict { pass: false, slack: f64::NEG_INFINITY }),
        }

        let mut kinds = BTreeMap::new();
        for rec in classify_cut_points(prof) {
            *kinds.entry(kind_name(rec.kind).to_string()).or_insert(0) += 1;
        }
        points.push(PointRecord {
            label: cand.label.clone(),
            point: cand.point,
            error,
            d_p: Some(prof.d_p),
            rho_p: Some(prof.rho_p),
            cut_length: Some(prof.cut_length),
            m_p: Some(prof.m_p),
            area: Some(pa.area),
            a_p: Some(sp.a_p),
            l_p: Some(sp.l_p),
            f_prime_end: Some(sp.f_prime_end()),
            total_curvature_sym: tc_sym,
            residual_max: Some(sp.residual_max),
            fermi_identity_error: pa.fermi.as_ref().map(|f| f.identity_error),
            cut_point_kinds: kinds,
            bounds,
        });
    }
    let conj_pass = ratio <= 0.5 * PI + 1e-12;
    merge(&mut verdicts, "conjecture", Verdict::le(ratio, 0.5 * PI, 1e-12));
    let notes = vec![
        "countability of conjugate points in the cut locus: assumed, not checked".to_string(),
        "D is a sampled maximum over base points: certified as a lower bound".to_string(),
        "inj is a sampled minimum over base points: certified as an upper bound; the rho_p variants are rigorous per point".to_string(),
    ];
    Ok(RatioReport {
        surface: surface.descriptor().clone(),
        area,
        area_extrinsic,
        total_curvature,
        diameter: diam,
        inj,
        ratio,
        points,
        verdicts,
        conjecture: ConjectureVerdict { ratio, bound: 0.5 * PI, pass: conj_pass, certified_by: certified_by.map(|c| c.0) },
        notes,
    })
}
