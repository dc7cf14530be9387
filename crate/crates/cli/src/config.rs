//! TOML run configuration. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use isodiam::cutlocus::CutOptions;
use isodiam::global::{AnalysisOptions, RefineOptions};
use isodiam::highdim::SphericalProfile;
use isodiam::numerics::Tolerances;
use isodiam::surface::{ellipsoid, sphere, surface_of_revolution, EllipseMeridianProfile, ParametricSurface, TangentAngleProfile};
use isodiam::symmetrize::SymmetrizeOptions;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SurfaceConfig {
    Sphere {
        radius: f64,
    },
    Ellipsoid {
        a: f64,
        b: f64,
        c: f64,
    },
    /// Generatrix with tangent angle π s/L + Σ α_k sin(2π k s/L).
    TangentAngle {
        length: f64,
        alphas: Vec<f64>,
    },
    /// Spheroid built through the revolution code path.
    EllipseMeridian {
        a: f64,
        c: f64,
    },
}

impl SurfaceConfig {
    pub fn build(&self) -> Result<ParametricSurface> {
        Ok(match self {
            Self::Sphere { radius } => sphere(*radius)?,
            Self::Ellipsoid { a, b, c } => ellipsoid(*a, *b, *c)?,
            Self::TangentAngle { length, alphas } => surface_of_revolution(Arc::new(TangentAngleProfile::new(*length, alphas.clone())?))?,
            Self::EllipseMeridian { a, c } => surface_of_revolution(Arc::new(EllipseMeridianProfile::new(*a, *c)?))?,
        })
    }

    /// Copy with one named scalar parameter replaced (sweeps).
    pub fn with_param(&self, name: &str, value: f64) -> Result<Self> {
        let mut out = self.clone();
        let slot = match (&mut out, name) {
            (Self::Sphere { radius }, "radius") => radius,
            (Self::Ellipsoid { a, .. }, "a") | (Self::EllipseMeridian { a, .. }, "a") => a,
            (Self::Ellipsoid { b, .. }, "b") => b,
            (Self::Ellipsoid { c, .. }, "c") | (Self::EllipseMeridian { c, .. }, "c") => c,
            (Self::TangentAngle { length, .. }, "length") => length,
            _ => bail!("surface has no sweepable parameter '{name}'"),
        };
        *slot = value;
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasePointConfig {
    /// Restrict to these candidate labels (axis_x, umbilic, pole_top, ...);
    /// empty keeps all named points.
    #[serde(default)]
    pub named: Vec<String>,
    /// Chart grid side for extra candidates; 0 disables.
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    6
}

impl Default for BasePointConfig {
    fn default() -> Self {
        Self { named: Vec::new(), grid: default_grid() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_n")]
    pub n_theta: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_n")]
    pub n_dist: usize,
}

fn default_n() -> usize {
    256
}
fn default_m() -> usize {
    1024
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_theta: default_n(), m: default_m(), n_dist: default_n() }
    }
}

/// Overrides of the library defaults; absent keys keep them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceConfig {
    pub ode_abs: Option<f64>,
    pub ode_rel: Option<f64>,
    pub tol_min: Option<f64>,
    /// Shooting length as a multiple of (π/2)·extrinsic diameter bound.
    pub length_factor: Option<f64>,
    pub newton_tol: Option<f64>,
    pub residual_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RefineConfig {
    #[serde(default)]
    pub max_evals: usize,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_step() -> f64 {
    0.05
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { max_evals: 0, step: default_step() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileConfig {
    Sin {
        dims: Vec<usize>,
    },
    ScaledSin {
        radius: f64,
        amp: f64,
        dims: Vec<usize>,
    },
    DoubleBall {
        diameter: f64,
        dims: Vec<usize>,
    },
    /// Two-column file `s,f` with a header row.
    Csv {
        path: PathBuf,
        dims: Vec<usize>,
    },
}

impl ProfileConfig {
    pub fn dims(&self) -> &[usize] {
        match self {
            Self::Sin { dims } | Self::ScaledSin { dims, .. } | Self::DoubleBall { dims, .. } | Self::Csv { dims, .. } => dims,
        }
    }

    pub fn build(&self, d: usize, base_dir: &Path) -> Result<SphericalProfile> {
        Ok(match self {
            Self::Sin { .. } => SphericalProfile::sine(d)?,
            Self::ScaledSin { radius, amp, .. } => SphericalProfile::scaled_sine(d, *radius, *amp)?,
            Self::DoubleBall { diameter, .. } => SphericalProfile::double_ball(d, *diameter)?,
            Self::Csv { path, .. } => {
                let path = base_dir.join(path);
                let (s, f) = read_profile_csv(&path)?;
                SphericalProfile::from_samples(d, s, f)?
            }
        })
    }

    pub fn label(&self) -> String {
        match self {
            Self::Sin { .. } => "sin".into(),
            Self::ScaledSin { radius, amp, .. } => format!("scaled-sin(r={radius},amp={amp})"),
            Self::DoubleBall { diameter, .. } => format!("double-ball(D={diameter})"),
            Self::Csv { path, .. } => format!("csv({})", path.display()),
        }
    }
}

fn read_profile_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading profile {}", path.display()))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().unwrap_or("");
    if header.replace(' ', "") != "s,f" {
        bail!("{}: expected header 's,f', got '{header}'", path.display());
    }
    let (mut s, mut f) = (Vec::new(), Vec::new());
    for (i, line) in lines.enumerate() {
        let mut it = line.split(',').map(str::trim);
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            bail!("{}: row {} must have two columns", path.display(), i + 2);
        };
        s.push(a.parse::<f64>().with_context(|| format!("{}: row {}", path.display(), i + 2))?);
        f.push(b.parse::<f64>().with_context(|| format!("{}: row {}", path.display(), i + 2))?);
    }
    Ok((s, f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HighdimConfig {
    pub profiles: Vec<ProfileConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub surface: Option<SurfaceConfig>,
    #[serde(default)]
    pub base_points: BasePointConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub tolerances: ToleranceConfig,
    #[serde(default)]
    pub refine: RefineConfig,
    /// Verdict names to evaluate; empty means all.
    #[serde(default)]
    pub checks: Vec<String>,
    pub out_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub sweep: Option<SweepConfig>,
    pub highdim: Option<HighdimConfig>,
}

/// The part of the config that determines results; echoed in reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho<'a> {
    pub surface: &'a Option<SurfaceConfig>,
    pub base_points: &'a BasePointConfig,
    pub grid: &'a GridConfig,
    pub tolerances: &'a ToleranceConfig,
    pub refine: &'a RefineConfig,
    pub checks: &'a [String],
}

fn positive(name: &str, v: Option<f64>) -> Result<()> {
    if let Some(x) = v {
        if !(x > 0.0 && x.is_finite()) {
            bail!("tolerance override {name} must be positive, got {x}");
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        for (name, v, lo, hi) in [("n_theta", g.n_theta, 8, 1 << 14), ("n_dist", g.n_dist, 8, 1 << 14), ("m", g.m, 8, 1 << 16)] {
            if v < lo || v > hi {
                bail!("grid.{name} = {v} outside [{lo}, {hi}]");
            }
        }
        if !g.n_theta.is_multiple_of(4) {
            bail!("grid.n_theta must be a multiple of 4, got {}", g.n_theta);
        }
        if self.base_points.grid > 64 {
            bail!("base_points.grid = {} outside [0, 64]", self.base_points.grid);
        }
        let t = &self.tolerances;
        positive("ode_abs", t.ode_abs)?;
        positive("ode_rel", t.ode_rel)?;
        positive("tol_min", t.tol_min)?;
        positive("length_factor", t.length_factor)?;
        positive("newton_tol", t.newton_tol)?;
        positive("residual_tol", t.residual_tol)?;
        if !(self.refine.step > 0.0) {
            bail!("refine.step must be positive");
        }
        if self.workers == Some(0) {
            bail!("workers must be at least 1");
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                bail!("sweep.values is empty");
            }
        }
        if let Some(h) = &self.highdim {
            for p in &h.profiles {
                if p.dims().iter().any(|&d| !(2..=16).contains(&d)) {
                    bail!("highdim dimensions must lie in [2, 16]");
                }
            }
        }
        Ok(())
    }

    pub fn echo(&self) -> ConfigEcho<'_> {
        ConfigEcho {
            surface: &self.surface,
            base_points: &self.base_points,
            grid: &self.grid,
            tolerances: &self.tolerances,
            refine: &self.refine,
            checks: &self.checks,
        }
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        let mut cut = CutOptions { n: self.grid.n_theta, n_dist: self.grid.n_dist, ..CutOptions::default() };
        let t = &self.tolerances;
        let d = Tolerances::default();
        cut.shoot.tol = Tolerances { abs: t.ode_abs.unwrap_or(d.abs), rel: t.ode_rel.unwrap_or(d.rel) };
        if let Some(v) = t.tol_min {
            cut.tol_min = v;
        }
        if let Some(v) = t.length_factor {
            cut.length_factor = v;
        }
        if let Some(v) = t.newton_tol {
            cut.oracle.newton_tol = v;
        }
        cut.oracle.n_dist = self.grid.n_dist;
        cut.oracle.shoot = cut.shoot;
        let mut sym = SymmetrizeOptions { m: self.grid.m, ..SymmetrizeOptions::default() };
        if let Some(v) = t.residual_tol {
            sym.residual_tol = v;
        }
        AnalysisOptions {
            cut,
            sym,
            grid: self.base_points.grid,
            refine: RefineOptions { max_evals: self.refine.max_evals, step: self.refine.step, ..RefineOptions::default() },
        }
    }
}
