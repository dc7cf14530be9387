//! Chart-based models of closed surfaces in R³.
//!
//! A surface is an atlas of charts with analytic (or finite-difference)
//! derivatives up to second order. Metric, Christoffel symbols and Gauss
//! curvature are derived from the chart jet.

mod ellipsoid;
mod fd;
mod revolution;

use std::fmt::Debug;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::adaptive_quadrature;

pub use ellipsoid::EllipsoidChart;
pub use fd::FdChart;
pub use revolution::{ArclengthProfile, CapChart, EllipseMeridianProfile, MeridianChart, ProfilePoint, SampledProfile, TangentAngleProfile};

pub type Vec3 = [f64; 3];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn scale(s: f64, a: Vec3) -> Vec3 {
    [s * a[0], s * a[1], s * a[2]]
}

pub fn axpy(s: f64, a: Vec3, b: Vec3) -> Vec3 {
    [s * a[0] + b[0], s * a[1] + b[1], s * a[2] + b[2]]
}

pub fn normalize(a: Vec3) -> Vec3 {
    scale(1.0 / norm(a), a)
}

/// Position and partial derivatives up to second order at a chart point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub x: Vec3,
    pub xu: Vec3,
    pub xv: Vec3,
    pub xuu: Vec3,
    pub xuv: Vec3,
    pub xvv: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartDomain {
    pub u: (f64, f64),
    pub v: (f64, f64),
    pub u_periodic: bool,
    pub v_periodic: bool,
}

/// Width of the declared singular bands, in chart quality units.
pub const SINGULAR_BAND: f64 = 1e-6;

pub trait Chart: Send + Sync + Debug {
    fn domain(&self) -> ChartDomain;

    /// Jet without any singularity check.
    fn jet(&self, u: f64, v: f64) -> Jet;

    /// Conditioning of the chart at (u, v): 1 is well inside, 0 at a
    /// declared singularity or the domain boundary.
    fn quality(&self, u: f64, v: f64) -> f64;

    /// Chart coordinates of a surface point, if the point is covered.
    fn invert(&self, p: Vec3) -> Option<(f64, f64)>;

    /// +1 when ∂_u X × ∂_v X points out of the enclosed body.
    fn orientation(&self) -> f64;

    fn checked_jet(&self, u: f64, v: f64) -> Result<Jet> {
        if !(self.quality(u, v) >= SINGULAR_BAND) {
            return Err(Error::SingularChart { u, v });
        }
        Ok(self.jet(u, v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTensor {
    pub g_uu: f64,
    pub g_uv: f64,
    pub g_vv: f64,
}

impl MetricTensor {
    pub fn det(&self) -> f64 {
        self.g_uu * self.g_vv - self.g_uv * self.g_uv
    }

    /// Solves g·x = rhs.
    pub fn solve(&self, rhs: [f64; 2]) -> [f64; 2] {
        let det = self.det();
        [(self.g_vv * rhs[0] - self.g_uv * rhs[1]) / det, (self.g_uu * rhs[1] - self.g_uv * rhs[0]) / det]
    }

    pub fn inner(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        self.g_uu * a[0] * b[0] + self.g_uv * (a[0] * b[1] + a[1] * b[0]) + self.g_vv * a[1] * b[1]
    }
}

/// Levi-Civita symbols Γ^k_ij, stored without the symmetric duplicates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Christoffel {
    /// Γ^u_uu, Γ^u_uv, Γ^u_vv
    pub u: [f64; 3],
    /// Γ^v_uu, Γ^v_uv, Γ^v_vv
    pub v: [f64; 3],
}

impl Christoffel {
    /// Γ^k_ij with indices 0 = u, 1 = v.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        let row = if k == 0 { &self.u } else { &self.v };
        row[i + j]
    }

    /// All eight symbols in (k, i, j) lexicographic order.
    pub fn as_array(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    out[4 * k + 2 * i + j] = self.get(k, i, j);
                }
            }
        }
        out
    }
}

/// Everything the geodesic equations need at one chart point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalGeometry {
    pub jet: Jet,
    pub metric: MetricTensor,
    pub christoffel: Christoffel,
    pub gauss: f64,
    pub mean: f64,
    /// Outward unit normal.
    pub normal: Vec3,
    /// Second fundamental form (L, M, N) for the outward normal.
    pub second: [f64; 3],
}

impl LocalGeometry {
    pub fn from_jet(jet: Jet, orientation: f64) -> Self {
        let e = dot(jet.xu, jet.xu);
        let f = dot(jet.xu, jet.xv);
        let g = dot(jet.xv, jet.xv);
        let metric = MetricTensor { g_uu: e, g_uv: f, g_vv: g };
        let det = e * g - f * f;
        let (iuu, iuv, ivv) = (g / det, -f / det, e / det);
        let proj = |w: Vec3| (dot(w, jet.xu), dot(w, jet.xv));
        let (uu_u, uu_v) = proj(jet.xuu);
        let (uv_u, uv_v) = proj(jet.xuv);
        let (vv_u, vv_v) = proj(jet.xvv);
        let christoffel = Christoffel {
            u: [iuu * uu_u + iuv * uu_v, iuu * uv_u + iuv * uv_v, iuu * vv_u + iuv * vv_v],
            v: [iuv * uu_u + ivv * uu_v, iuv * uv_u + ivv * uv_v, iuv * vv_u + ivv * vv_v],
        };
        let n = scale(orientation, normalize(cross(jet.xu, jet.xv)));
        let (l, m, nn) = (dot(jet.xuu, n), dot(jet.xuv, n), dot(jet.xvv, n));
        let gauss = (l * nn - m * m) / det;
        // Mean curvature with the sign making it positive on convex bodies.
        let mean = -(e * nn - 2.0 * f * m + g * l) / (2.0 * det);
        Self { jet, metric, christoffel, gauss, mean, normal: n, second: [l, m, nn] }
    }

    /// Principal curvatures (κ_max, κ_min), positive on convex bodies.
    ///
    /// The split comes from the entries of the Weingarten map rather than
    /// from H² − K, which would lose half the digits near umbilics.
    pub fn principal_curvatures(&self) -> (f64, f64) {
        let MetricTensor { g_uu: e, g_uv: f, g_vv: g } = self.metric;
        let [l, m, n] = self.second;
        let det = self.metric.det();
        let w11 = (g * l - f * m) / det;
        let w12 = (g * m - f * n) / det;
        let w21 = (e * m - f * l) / det;
        let w22 = (e * n - f * m) / det;
        let half = 0.5 * ((w11 - w22).powi(2) + 4.0 * w12 * w21).max(0.0).sqrt();
        let mean = -0.5 * (w11 + w22);
        (mean + half, mean - half)
    }
}

/// Built-in surface families; used for descriptors, symmetry reduction and
/// closed-form helpers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SurfaceKind {
    Sphere { r: f64 },
    Ellipsoid { a: f64, b: f64, c: f64 },
    Revolution { profile: String, params: Vec<f64> },
    Custom { name: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDescriptor {
    pub name: String,
    pub params: Vec<(String, f64)>,
}

#[derive(Debug)]
struct SurfaceInner {
    kind: SurfaceKind,
    descriptor: SurfaceDescriptor,
    charts: Vec<Arc<dyn Chart>>,
    /// Chart over which area integrals run (covers all but a null set).
    area_chart: usize,
    closed: bool,
    extrinsic_diameter_upper: f64,
    /// Mirror symmetry in each coordinate plane.
    reflection_symmetric: bool,
    /// Rotational symmetry about the z-axis.
    axisymmetric: bool,
}

/// Immutable atlas; cheap to clone.
#[derive(Debug, Clone)]
pub struct ParametricSurface {
    inner: Arc<SurfaceInner>,
}

impl ParametricSurface {
    pub fn from_charts(
        kind: SurfaceKind,
        descriptor: SurfaceDescriptor,
        charts: Vec<Arc<dyn Chart>>,
        closed: bool,
        extrinsic_diameter_upper: f64,
    ) -> Result<Self> {
        if charts.is_empty() {
            return Err(Error::InvalidParameter("surface needs at least one chart".into()));
        }
        Ok(Self {
            inner: Arc::new(SurfaceInner {
                kind,
                descriptor,
                charts,
                area_chart: 0,
                closed,
                extrinsic_diameter_upper,
                reflection_symmetric: false,
                axisymmetric: false,
            }),
        })
    }

    fn with_symmetry(mut self, reflection: bool, axis: bool) -> Self {
        let inner = Arc::get_mut(&mut self.inner).expect("fresh surface");
        inner.reflection_symmetric = reflection;
        inner.axisymmetric = axis;
        self
    }

    pub fn kind(&self) -> &SurfaceKind {
        &self.inner.kind
    }

    pub fn descriptor(&self) -> &SurfaceDescriptor {
        &self.inner.descriptor
    }

    pub fn charts(&self) -> &[Arc<dyn Chart>] {
        &self.inner.charts
    }

    pub fn chart(&self, i: usize) -> &dyn Chart {
        self.inner.charts[i].as_ref()
    }

    pub fn is_closed(&self) -> bool {
        self.inner.closed
    }

    pub fn reflection_symmetric(&self) -> bool {
        self.inner.reflection_symmetric
    }

    pub fn axisymmetric(&self) -> bool {
        self.inner.axisymmetric
    }

    /// Upper bound on the extrinsic diameter; (π/2)× this bounds the
    /// intrinsic diameter of a convex surface.
    pub fn extrinsic_diameter_upper(&self) -> f64 {
        self.inner.extrinsic_diameter_upper
    }

    pub fn geometry(&self, chart: usize, u: f64, v: f64) -> Result<LocalGeometry> {
        let c = self.chart(chart);
        Ok(LocalGeometry::from_jet(c.checked_jet(u, v)?, c.orientation()))
    }

    pub fn position(&self, chart: usize, u: f64, v: f64) -> Vec3 {
        self.chart(chart).jet(u, v).x
    }

    /// Chart with the best quality at a surface point, and its coordinates.
    pub fn best_chart(&self, p: Vec3) -> Option<(usize, f64, f64, f64)> {
        let mut best: Option<(usize, f64, f64, f64)> = None;
        for (i, c) in self.charts().iter().enumerate() {
            if let Some((u, v)) = c.invert(p) {
                let q = c.quality(u, v);
                if best.is_none_or(|b| q > b.3) {
                    best = Some((i, u, v, q));
                }
            }
        }
        best
    }

    fn area_integral(&self, weight: impl Fn(&LocalGeometry) -> f64, rel_tol: f64) -> Result<f64> {
        let ci = self.inner.area_chart;
        let chart = self.chart(ci);
        let orient = chart.orientation();
        let dom = chart.domain();
        let (v0, v1) = dom.v;
        let inner = |u: f64, nv: usize| -> f64 {
            let h = (v1 - v0) / nv as f64;
            let mut s = 0.0;
            for j in 0..nv {
                let v = v0 + (j as f64 + 0.5) * h;
                let geo = LocalGeometry::from_jet(chart.jet(u, v), orient);
                s += weight(&geo) * geo.metric.det().max(0.0).sqrt();
            }
            s * h
        };
        // Resolve the periodic v direction once, at a generic u, and reuse
        // that resolution everywhere.
        let u_probe = dom.u.0 + 0.381_966 * (dom.u.1 - dom.u.0);
        let mut nv = 32;
        let mut prev = inner(u_probe, nv);
        while nv < 4096 {
            let next = inner(u_probe, 2 * nv);
            nv *= 2;
            if (next - prev).abs() <= 1e-14 * next.abs().max(1e-300) {
                break;
            }
            prev = next;
        }
        let nv = if dom.v_periodic { nv } else { nv.max(256) };
        let scale_est = inner(u_probe, nv).abs().max(1e-300) * (dom.u.1 - dom.u.0);
        adaptive_quadrature(|u| inner(u, nv), dom.u.0, dom.u.1, rel_tol * scale_est)
    }

    /// Surface area by 2-D quadrature of |X_u × X_v| over the area chart.
    pub fn extrinsic_area(&self) -> Result<f64> {
        self.area_integral(|_| 1.0, 1e-10)
    }

    /// ∫ K dA by 2-D quadrature over the area chart.
    pub fn total_curvature(&self) -> Result<f64> {
        self.area_integral(|g| g.gauss, 1e-10)
    }
}

/// Metric of the primary chart at (u, v).
pub fn metric_at(s: &ParametricSurface, u: f64, v: f64) -> Result<MetricTensor> {
    Ok(s.geometry(0, u, v)?.metric)
}

/// Christoffel symbols of the primary chart at (u, v).
pub fn christoffel_at(s: &ParametricSurface, u: f64, v: f64) -> Result<Christoffel> {
    Ok(s.geometry(0, u, v)?.christoffel)
}

/// Gauss curvature at a primary-chart point.
pub fn gauss_curvature_at(s: &ParametricSurface, u: f64, v: f64) -> Result<f64> {
    Ok(s.geometry(0, u, v)?.gauss)
}

pub fn extrinsic_area(s: &ParametricSurface) -> Result<f64> {
    s.extrinsic_area()
}

pub fn ellipsoid(a: f64, b: f64, c: f64) -> Result<ParametricSurface> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!("ellipsoid axes must be positive, got ({a}, {b}, {c})")));
    }
    if !(a >= b && b >= c) {
        return Err(Error::InvalidParameter(format!("ellipsoid axes must satisfy a >= b >= c, got ({a}, {b}, {c})")));
    }
    let desc = SurfaceDescriptor { name: "ellipsoid".into(), params: vec![("a".into(), a), ("b".into(), b), ("c".into(), c)] };
    ellipsoid_atlas(SurfaceKind::Ellipsoid { a, b, c }, desc, a, b, c)
}

pub fn sphere(r: f64) -> Result<ParametricSurface> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("sphere radius must be positive, got {r}")));
    }
    let desc = SurfaceDescriptor { name: "sphere".into(), params: vec![("r".into(), r)] };
    ellipsoid_atlas(SurfaceKind::Sphere { r }, desc, r, r, r)
}

fn ellipsoid_atlas(kind: SurfaceKind, desc: SurfaceDescriptor, a: f64, b: f64, c: f64) -> Result<ParametricSurface> {
    let charts: Vec<Arc<dyn Chart>> = vec![Arc::new(EllipsoidChart::z_poles(a, b, c)), Arc::new(EllipsoidChart::x_poles(a, b, c))];
    let axis = a == b;
    Ok(ParametricSurface::from_charts(kind, desc, charts, true, 2.0 * a)?.with_symmetry(true, axis))
}

/// Closed surface obtained by rotating a unit-speed generatrix about the z-axis.
pub fn surface_of_revolution(profile: Arc<dyn ArclengthProfile>) -> Result<ParametricSurface> {
    revolution::validate_closed(profile.as_ref())?;
    let (name, params) = profile.descriptor();
    let desc = SurfaceDescriptor { name: format!("revolution:{name}"), params: params.clone() };
    let kind = SurfaceKind::Revolution { profile: name, params: params.iter().map(|p| p.1).collect() };
    let main = MeridianChart::new(profile.clone())?;
    let caps = (CapChart::new(profile.clone(), false)?, CapChart::new(profile.clone(), true)?);
    let diam = main.extrinsic_diameter_upper();
    let sym = profile.equator_symmetric();
    let charts: Vec<Arc<dyn Chart>> = vec![Arc::new(main), Arc::new(caps.0), Arc::new(caps.1)];
    Ok(ParametricSurface::from_charts(kind, desc, charts, true, diam)?.with_symmetry(sym, true))
}

/// Meridian chart of a generatrix without the closing checks, for open
/// profiles such as a reconstructed embedding.
pub fn revolution_patch(profile: Arc<dyn ArclengthProfile>) -> Result<ParametricSurface> {
    let (name, params) = profile.descriptor();
    let desc = SurfaceDescriptor { name: format!("revolution-patch:{name}"), params: params.clone() };
    let kind = SurfaceKind::Revolution { profile: name, params: params.iter().map(|p| p.1).collect() };
    let main = MeridianChart::new_open(profile)?;
    let diam = main.extrinsic_diameter_upper();
    ParametricSurface::from_charts(kind, desc, vec![Arc::new(main) as Arc<dyn Chart>], false, diam)
}

/// Flat square [-1, 1]² in the z = 0 plane (a test fixture, not closed).
pub fn plane_patch() -> ParametricSurface {
    #[derive(Debug)]
    struct Plane;
    impl Chart for Plane {
        fn domain(&self) -> ChartDomain {
            ChartDomain { u: (-1.0, 1.0), v: (-1.0, 1.0), u_periodic: false, v_periodic: false }
        }
        fn jet(&self, u: f64, v: f64) -> Jet {
            Jet { x: [u, v, 0.0], xu: [1.0, 0.0, 0.0], xv: [0.0, 1.0, 0.0], xuu: [0.0; 3], xuv: [0.0; 3], xvv: [0.0; 3] }
        }
        fn quality(&self, u: f64, v: f64) -> f64 {
            (1.0 - u.abs()).min(1.0 - v.abs()).max(0.0)
        }
        fn invert(&self, p: Vec3) -> Option<(f64, f64)> {
            (p[0].abs() <= 1.0 && p[1].abs() <= 1.0).then_some((p[0], p[1]))
        }
        fn orientation(&self) -> f64 {
            1.0
        }
    }
    ParametricSurface::from_charts(
        SurfaceKind::Custom { name: "plane".into() },
        SurfaceDescriptor { name: "plane".into(), params: vec![] },
        vec![Arc::new(Plane)],
        false,
        2.0 * 2f64.sqrt(),
    )
    .expect("one chart")
}

/// Surface from a user-supplied position map; derivatives by finite differences.
pub fn from_position_map(
    name: &str,
    domain: ChartDomain,
    position: Arc<dyn Fn(f64, f64) -> Vec3 + Send + Sync>,
    closed: bool,
) -> Result<ParametricSurface> {
    let chart = FdChart::new(position, domain);
    let diam = chart.extrinsic_diameter_estimate();
    ParametricSurface::from_charts(
        SurfaceKind::Custom { name: name.into() },
        SurfaceDescriptor { name: name.into(), params: vec![] },
        vec![Arc::new(chart)],
        closed,
        diam,
    )
}

/// The four umbilics of a triaxial ellipsoid (a > b > c), on the x–z plane.
pub fn ellipsoid_umbilics(a: f64, b: f64, c: f64) -> Vec<Vec3> {
    if !(a > b && b > c) {
        return Vec::new();
    }
    let x = a * ((a * a - b * b) / (a * a - c * c)).sqrt();
    let z = c * ((b * b - c * c) / (a * a - c * c)).sqrt();
    vec![[x, 0.0, z], [x, 0.0, -z], [-x, 0.0, z], [-x, 0.0, -z]]
}

/// A point of the surface together with an oriented orthonormal frame.
#[derive(Debug, Clone)]
pub struct BasePoint {
    pub surface: ParametricSurface,
    pub chart: usize,
    pub u: f64,
    pub v: f64,
    /// Frame vectors in chart coordinates; e2 = N × e1.
    pub e1: [f64; 2],
    pub e2: [f64; 2],
}

impl BasePoint {
    /// Base point at chart coordinates; e1 is the normalized ∂_u direction.
    pub fn new(surface: &ParametricSurface, chart: usize, u: f64, v: f64) -> Result<Self> {
        if chart >= surface.charts().len() {
            return Err(Error::InvalidParameter(format!("chart index {chart} out of range")));
        }
        let geo = surface.geometry(chart, u, v)?;
        let e1 = [1.0 / geo.metric.g_uu.sqrt(), 0.0];
        let e1_3 = scale(e1[0], geo.jet.xu);
        let w = cross(geo.normal, e1_3);
        let e2 = geo.metric.solve([dot(w, geo.jet.xu), dot(w, geo.jet.xv)]);
        Ok(Self { surface: surface.clone(), chart, u, v, e1, e2 })
    }

    /// Base point at (the projection onto the surface of) a 3-D point, in the
    /// best-conditioned chart.
    pub fn at_point(surface: &ParametricSurface, p: Vec3) -> Result<Self> {
        let (c, u, v, _) = surface.best_chart(p).ok_or_else(|| Error::InvalidParameter(format!("point {p:?} not covered by any chart")))?;
        Self::new(surface, c, u, v)
    }

    pub fn position(&self) -> Vec3 {
        self.surface.position(self.chart, self.u, self.v)
    }

    pub fn geometry(&self) -> LocalGeometry {
        self.surface.geometry(self.chart, self.u, self.v).expect("base point validated at construction")
    }

    /// Unit tangent vector (3-D) for the initial angle θ.
    pub fn direction(&self, theta: f64) -> ([f64; 2], Vec3) {
        let (c, s) = (theta.cos(), theta.sin());
        let coords = [c * self.e1[0] + s * self.e2[0], c * self.e1[1] + s * self.e2[1]];
        let jet = self.surface.chart(self.chart).jet(self.u, self.v);
        (coords, axpy(coords[0], jet.xu, scale(coords[1], jet.xv)))
    }
}

#[cfg(test)]
mod tests;
