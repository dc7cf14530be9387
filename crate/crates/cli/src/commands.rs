//! Subcommand drivers. Exit codes: 0 all verdicts pass, 1 a verdict
//! fails, 2 numerical failure or bad input.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use isodiam::cutlocus::{compute_cut_profile_from, shoot_profile_traces};
use isodiam::geodesic::{DistanceOracle, OracleOptions};
use isodiam::global::{analyze_profile, candidate_points, report_from_analyses, AnalysisOptions, Candidate, PointAnalysis, RatioReport};
use isodiam::highdim::{
    bound_check_highdim, embeddability_check, half_split_certificate, profile_invariants, Embeddability, HalfSplit, HighdimBound, ProfileInvariants,
};
use isodiam::surface::{BasePoint, ParametricSurface};
use isodiam::symmetrize;

use crate::cache::{TraceCache, TraceSet, ENV_VAR};
use crate::config::{ConfigEcho, RunConfig};
use crate::output::{self, SweepRow};

pub const REPORT_SCHEMA: u32 = 1;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_VERDICT: u8 = 1;
pub const EXIT_NUMERIC: u8 = 2;

/// Command-line settings that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub n_theta: Option<usize>,
    pub checks: Option<Vec<String>>,
}

pub fn apply_overrides(cfg: &mut RunConfig, o: &Overrides) -> Result<()> {
    if let Some(out) = &o.out {
        cfg.out_dir = Some(out.clone());
    }
    if let Some(w) = o.workers {
        cfg.workers = Some(w);
    }
    if let Some(n) = o.n_theta {
        cfg.grid.n_theta = n;
    }
    if let Some(c) = &o.checks {
        cfg.checks = c.clone();
    }
    cfg.validate()
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("isodiam-out"))
}

pub fn cache_root(cfg: Option<&RunConfig>, explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(ENV_VAR) {
        return PathBuf::from(p);
    }
    match cfg {
        Some(c) => c.cache_dir.clone().unwrap_or_else(|| out_dir(c).join("cache")),
        None => PathBuf::from("isodiam-out").join("cache"),
    }
}

fn with_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        b = b.num_threads(w);
    }
    let pool = b.build().context("building worker pool")?;
    Ok(pool.install(f))
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub name: String,
    pub pass: bool,
    pub slack: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument<'a> {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub config: ConfigEcho<'a>,
    pub report: &'a RatioReport,
    pub checks: Vec<CheckRow>,
    pub notes: &'a [String],
}

#[derive(Debug, Clone, Serialize)]
struct PointTiming {
    label: String,
    seconds: f64,
    cache_hit: bool,
}

#[derive(Debug, Clone, Serialize)]
struct Timing {
    total_seconds: f64,
    points: Vec<PointTiming>,
}

/// Result of one analysis run, before anything is written.
pub struct Analysis {
    pub report: RatioReport,
    pub checks: Vec<CheckRow>,
    pub analyses: Vec<Option<PointAnalysis>>,
    pub exit: u8,
    timing: Timing,
}

fn select_candidates(surface: &ParametricSurface, cfg: &RunConfig, grid: usize) -> Result<Vec<Candidate>> {
    let all = candidate_points(surface, grid);
    if cfg.base_points.named.is_empty() {
        return Ok(all);
    }
    for name in &cfg.base_points.named {
        if !all.iter().any(|c| &c.label == name) {
            let known: Vec<&str> = all.iter().filter(|c| !c.label.starts_with("grid_")).map(|c| c.label.as_str()).collect();
            bail!("unknown base point '{name}' for this surface (known: {})", known.join(", "));
        }
    }
    Ok(all.into_iter().filter(|c| c.label.starts_with("grid_") || cfg.base_points.named.contains(&c.label)).collect())
}

fn point_pipeline(
    surface: &ParametricSurface,
    cand: &Candidate,
    opts: &AnalysisOptions,
    cache: Option<&TraceCache>,
) -> (isodiam::Result<PointAnalysis>, bool) {
    let run = || -> isodiam::Result<(PointAnalysis, bool)> {
        let base = BasePoint::at_point(surface, cand.point)?;
        let (set, hit) = match cache.and_then(|c| c.load(&base, &opts.cut)) {
            Some(set) => (set, true),
            None => {
                let (profile, fan) = shoot_profile_traces(&base, &opts.cut)?;
                let set = TraceSet { profile, fan };
                if let Some(c) = cache {
                    if let Err(e) = c.store(&base, &opts.cut, &set) {
                        eprintln!("warning: cache write failed: {e:#}");
                    }
                }
                (set, false)
            }
        };
        let oracle = DistanceOracle::from_traces(&base, set.fan, OracleOptions { n_dist: opts.cut.n_dist, ..opts.cut.oracle })?;
        let profile = compute_cut_profile_from(&base, set.profile, &oracle, &opts.cut)?;
        Ok((analyze_profile(cand, profile, opts)?, hit))
    };
    match run() {
        Ok((a, hit)) => (Ok(a), hit),
        Err(e) => (Err(e), false),
    }
}

/// Whole analyze pipeline for one config; no files written.
pub fn run_analysis(cfg: &RunConfig, use_cache: bool) -> Result<std::result::Result<Analysis, String>> {
    let Some(surface_cfg) = &cfg.surface else {
        bail!("config has no [surface] section");
    };
    let surface = surface_cfg.build().context("building surface")?;
    let opts = cfg.analysis_options();
    let candidates = select_candidates(&surface, cfg, opts.grid)?;
    let cache = use_cache.then(|| TraceCache::new(cache_root(Some(cfg), None)));
    let t0 = Instant::now();
    let per_point: Vec<(isodiam::Result<PointAnalysis>, bool, f64)> = with_pool(cfg.workers, || {
        candidates
            .par_iter()
            .map(|c| {
                let t = Instant::now();
                let (r, hit) = point_pipeline(&surface, c, &opts, cache.as_ref());
                (r, hit, t.elapsed().as_secs_f64())
            })
            .collect()
    })?;
    let mut failures = String::new();
    for (c, (r, _, _)) in candidates.iter().zip(&per_point) {
        if let Err(e) = r {
            failures.push_str(&format!("base point {} at {:?}: {e}\n", c.label, c.point));
        }
    }
    if !failures.is_empty() {
        eprint!("{failures}");
    }
    let timing = Timing {
        total_seconds: 0.0,
        points: candidates
            .iter()
            .zip(&per_point)
            .map(|(c, (_, hit, s))| PointTiming { label: c.label.clone(), seconds: *s, cache_hit: *hit })
            .collect(),
    };
    let results: Vec<isodiam::Result<PointAnalysis>> = per_point.into_iter().map(|(r, _, _)| r).collect();
    let report = match with_pool(cfg.workers, || report_from_analyses(&surface, &candidates, &results, &opts))? {
        Ok(r) => r,
        Err(e) => return Ok(Err(format!("report assembly failed: {e}"))),
    };

    let checks: Vec<CheckRow> = if cfg.checks.is_empty() {
        report.verdicts.iter().map(|(k, v)| CheckRow { name: k.clone(), pass: v.pass, slack: v.slack }).collect()
    } else {
        let mut rows = Vec::new();
        for name in &cfg.checks {
            let Some(v) = report.verdicts.get(name) else {
                let known: Vec<&str> = report.verdicts.keys().map(String::as_str).collect();
                bail!("unknown check '{name}' (known: {})", known.join(", "));
            };
            rows.push(CheckRow { name: name.clone(), pass: v.pass, slack: v.slack });
        }
        rows
    };
    let exit = if report.has_point_failures() {
        EXIT_NUMERIC
    } else if checks.iter().all(|c| c.pass) {
        EXIT_PASS
    } else {
        EXIT_VERDICT
    };
    let mut timing = timing;
    timing.total_seconds = t0.elapsed().as_secs_f64();
    Ok(Ok(Analysis { report, checks, analyses: results.into_iter().map(|r| r.ok()).collect(), exit, timing }))
}

fn safe_label(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

fn write_analysis(dir: &Path, cfg: &RunConfig, a: &Analysis, csv: bool) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let doc = ReportDocument {
        schema_version: REPORT_SCHEMA,
        tool_version: env!("CARGO_PKG_VERSION"),
        config: cfg.echo(),
        report: &a.report,
        checks: a.checks.clone(),
        notes: &a.report.notes,
    };
    output::write_json(&dir.join("report.json"), &doc)?;
    // Wall-clock numbers live apart so the report stays byte-stable.
    output::write_json(&dir.join("timing.json"), &a.timing)?;
    let rows: Vec<(String, bool, f64)> = a.checks.iter().map(|c| (c.name.clone(), c.pass, c.slack)).collect();
    output::checks_csv(&dir.join("checks.csv"), &rows)?;
    if !csv {
        return Ok(());
    }
    for pa in a.analyses.iter().flatten() {
        let label = safe_label(&pa.candidate.label);
        output::cut_profile_csv(&dir.join(format!("cut_profile.{label}.csv")), &pa.profile)?;
        output::symmetric_csv(&dir.join(format!("symmetric.{label}.csv")), &pa.sym)?;
        match symmetrize::embedding(&pa.sym) {
            Ok(e) => output::embedding_csv(&dir.join(format!("embedding.{label}.csv")), &e)?,
            Err(e) => eprintln!("warning: no embedding for {}: {e}", pa.candidate.label),
        }
    }
    Ok(())
}

fn write_failure(dir: &Path, msg: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    #[derive(Serialize)]
    struct Failure<'a> {
        schema_version: u32,
        status: &'static str,
        diagnostics: Vec<&'a str>,
    }
    output::write_json(
        &dir.join("failure.json"),
        &Failure { schema_version: REPORT_SCHEMA, status: "numerical_failure", diagnostics: msg.lines().collect() },
    )
}

pub fn cmd_analyze(cfg: &RunConfig, no_cache: bool) -> Result<u8> {
    let dir = out_dir(cfg);
    match run_analysis(cfg, !no_cache)? {
        Ok(a) => {
            write_analysis(&dir, cfg, &a, true)?;
            let r = &a.report;
            println!(
                "A = {:.10}  D = {:.10}  inj = {:.10}  A/D^2 = {:.10}  conjecture {}",
                r.area,
                r.diameter.value,
                r.inj.value,
                r.ratio,
                if r.conjecture.pass { "pass" } else { "FAIL" }
            );
            for c in a.checks.iter().filter(|c| !c.pass) {
                eprintln!("check failed: {} (slack {:e})", c.name, c.slack);
            }
            println!("report written to {}", dir.join("report.json").display());
            Ok(a.exit)
        }
        Err(msg) => {
            eprintln!("{msg}");
            write_failure(&dir, &msg)?;
            Ok(EXIT_NUMERIC)
        }
    }
}

pub fn cmd_sweep(cfg: &RunConfig, no_cache: bool) -> Result<u8> {
    let Some(sweep) = &cfg.sweep else {
        bail!("config has no [sweep] section");
    };
    let Some(surface) = &cfg.surface else {
        bail!("config has no [surface] section");
    };
    let dir = out_dir(cfg);
    fs::create_dir_all(&dir)?;
    let mut rows = Vec::with_capacity(sweep.values.len());
    let mut exit = EXIT_PASS;
    for (i, &value) in sweep.values.iter().enumerate() {
        let mut run = cfg.clone();
        run.surface = Some(surface.with_param(&sweep.parameter, value)?);
        run.sweep = None;
        let sub = dir.join(format!("run_{i:03}"));
        run.out_dir = Some(sub.clone());
        match run_analysis(&run, !no_cache) {
            Ok(Ok(a)) => {
                write_analysis(&sub, &run, &a, false)?;
                let r = &a.report;
                let bounds: Vec<_> = r.points.iter().filter_map(|p| p.bounds.as_ref()).collect();
                let strong = bounds.iter().map(|b| b.strong).fold(f64::INFINITY, f64::min);
                let main = bounds.iter().map(|b| b.main_inj).fold(f64::INFINITY, f64::min);
                println!("{} = {value}: A/D^2 = {:.10}  exit {}", sweep.parameter, r.ratio, a.exit);
                rows.push(Some(SweepRow { parameter: value, area: r.area, diameter: r.diameter.value, ratio: r.ratio, strong, main }));
                exit = exit.max(a.exit);
            }
            Ok(Err(msg)) => {
                eprintln!("{} = {value}: {msg}", sweep.parameter);
                write_failure(&sub, &msg)?;
                rows.push(None);
                exit = EXIT_NUMERIC;
            }
            Err(e) => {
                eprintln!("{} = {value}: {e:#}", sweep.parameter);
                rows.push(None);
                exit = EXIT_NUMERIC;
            }
        }
    }
    output::sweep_csv(&dir.join("sweep.csv"), &rows, &sweep.values)?;
    println!("sweep table written to {}", dir.join("sweep.csv").display());
    Ok(exit)
}

#[derive(Debug, Clone, Serialize)]
struct HighdimRow {
    profile: String,
    d: usize,
    provenance: String,
    invariants: ProfileInvariants,
    embeddability: Embeddability,
    bound: HighdimBound,
    half_split: HalfSplit,
    pass: bool,
}

#[derive(Debug, Clone, Serialize)]
struct HighdimDocument {
    schema_version: u32,
    tool_version: &'static str,
    rows: Vec<HighdimRow>,
    notes: Vec<String>,
}

pub fn cmd_highdim(cfg: &RunConfig, config_dir: &Path) -> Result<u8> {
    let Some(h) = &cfg.highdim else {
        bail!("config has no [highdim] section");
    };
    let dir = out_dir(cfg);
    fs::create_dir_all(&dir)?;
    let mut rows = Vec::new();
    for p in &h.profiles {
        for &d in p.dims() {
            let sp = p.build(d, config_dir)?;
            let invariants = profile_invariants(&sp);
            let embeddability = embeddability_check(&sp);
            let bound = bound_check_highdim(&sp)?;
            let half_split = half_split_certificate(&sp)?;
            let pass = invariants.ok && embeddability.pass && bound.pass && half_split.pass;
            println!(
                "{} d={d}: A/D^d = {:.12} <= {:.12} (slack {:e}) {}",
                p.label(),
                bound.ratio,
                bound.bound,
                bound.slack,
                if pass { "pass" } else { "FAIL" }
            );
            rows.push(HighdimRow {
                profile: p.label(),
                d,
                provenance: format!("{:?}", sp.provenance),
                invariants,
                embeddability,
                bound,
                half_split,
                pass,
            });
        }
    }
    let all = rows.iter().all(|r| r.pass);
    let doc = HighdimDocument {
        schema_version: REPORT_SCHEMA,
        tool_version: env!("CARGO_PKG_VERSION"),
        rows,
        notes: vec!["diameter taken as the pole distance D_p of the profile".into()],
    };
    output::write_json(&dir.join("highdim.json"), &doc)?;
    Ok(if all { EXIT_PASS } else { EXIT_VERDICT })
}

pub fn cmd_cache_inspect(root: &Path) -> Result<u8> {
    let entries = TraceCache::new(root).inspect()?;
    println!("cache {}: {} entries", root.display(), entries.len());
    for e in &entries {
        println!(
            "{}  {} bytes  schema {}  traces {}/{}  {}",
            e.file,
            e.bytes,
            e.schema.map_or("?".into(), |s| s.to_string()),
            e.n_profile.map_or("?".into(), |s| s.to_string()),
            e.n_fan.map_or("?".into(), |s| s.to_string()),
            if e.valid { "ok" } else { "corrupt" }
        );
    }
    Ok(EXIT_PASS)
}

pub fn cmd_cache_clear(root: &Path) -> Result<u8> {
    let n = TraceCache::new(root).clear()?;
    println!("removed {n} entries from {}", root.display());
    Ok(EXIT_PASS)
}
