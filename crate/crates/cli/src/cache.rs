//! On-disk cache of shot geodesic fans.
//!
//! One file per (surface, base point, grids, shooting tolerances). Layout,
//! little endian:
//!
//! ```text
//! magic "ISODTRC\0" | schema u32 | key [32] | n_prof u32 | n_fan u32 | share u8
//! traces: theta f64 | t_max f64 | has_conj u8 | conj f64 | n_seg u32
//!   segment: chart u32 | dim u32 | n_break u32 | times | states | cont
//! sha256 of everything above [32]
//! ```
//!
//! `share` 0: profile traces are every (n_fan/n_prof)-th fan trace; 1: the
//! reverse; 2: both lists stored.

use std::fs;
use std::io::{Cursor, Read};
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use byteorder::{LittleEndian as LE, ReadBytesExt, WriteBytesExt};
use serde::Serialize;
use sha2::{Digest, Sha256};

use isodiam::cutlocus::CutOptions;
use isodiam::geodesic::{GeodesicTrace, TraceSegment};
use isodiam::numerics::DenseTrajectory;
use isodiam::surface::BasePoint;

const MAGIC: &[u8; 8] = b"ISODTRC\0";
pub const SCHEMA: u32 = 1;
pub const ENV_VAR: &str = "ISODIAM_CACHE_DIR";

#[derive(Serialize)]
struct KeyFields<'a> {
    schema: u32,
    surface: &'a str,
    params: Vec<(&'a str, u64)>,
    chart: usize,
    u: u64,
    v: u64,
    n: usize,
    n_dist: usize,
    length_factor: u64,
    ode_abs: u64,
    ode_rel: u64,
    switch_quality: u64,
}

/// Content hash of everything that determines the shot traces.
pub fn cache_key(base: &BasePoint, opts: &CutOptions) -> [u8; 32] {
    let desc = base.surface.descriptor();
    let fields = KeyFields {
        schema: SCHEMA,
        surface: &desc.name,
        params: desc.params.iter().map(|(k, v)| (k.as_str(), v.to_bits())).collect(),
        chart: base.chart,
        u: base.u.to_bits(),
        v: base.v.to_bits(),
        n: opts.n,
        n_dist: opts.n_dist,
        length_factor: opts.length_factor.to_bits(),
        ode_abs: opts.shoot.tol.abs.to_bits(),
        ode_rel: opts.shoot.tol.rel.to_bits(),
        switch_quality: opts.shoot.switch_quality.to_bits(),
    };
    let bytes = serde_json::to_vec(&fields).expect("key serializes");
    Sha256::digest(bytes).into()
}

pub struct TraceSet {
    pub profile: Vec<Arc<GeodesicTrace>>,
    pub fan: Vec<Arc<GeodesicTrace>>,
}

#[derive(Debug, Clone)]
pub struct TraceCache {
    root: PathBuf,
}

#[derive(Debug, Clone, Serialize)]
pub struct EntryInfo {
    pub file: String,
    pub bytes: u64,
    pub schema: Option<u32>,
    pub n_profile: Option<u32>,
    pub n_fan: Option<u32>,
    pub valid: bool,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

fn write_trace(w: &mut Vec<u8>, tr: &GeodesicTrace) {
    w.write_f64::<LE>(tr.theta).unwrap();
    w.write_f64::<LE>(tr.t_max).unwrap();
    w.write_u8(u8::from(tr.conjugate_time.is_some())).unwrap();
    w.write_f64::<LE>(tr.conjugate_time.unwrap_or(0.0)).unwrap();
    w.write_u32::<LE>(tr.segments.len() as u32).unwrap();
    for seg in &tr.segments {
        let (dim, times, states, cont) = seg.traj.parts();
        w.write_u32::<LE>(seg.chart as u32).unwrap();
        w.write_u32::<LE>(dim as u32).unwrap();
        w.write_u32::<LE>(times.len() as u32).unwrap();
        for x in times.iter().chain(states).chain(cont) {
            w.write_f64::<LE>(*x).unwrap();
        }
    }
}

fn read_f64s(r: &mut Cursor<&[u8]>, n: usize) -> Result<Vec<f64>> {
    let left = r.get_ref().len() as u64 - r.position();
    if (n as u64) * 8 > left {
        bail!("truncated array");
    }
    let mut v = vec![0.0; n];
    r.read_f64_into::<LE>(&mut v)?;
    Ok(v)
}

fn read_trace(r: &mut Cursor<&[u8]>, base: &BasePoint) -> Result<GeodesicTrace> {
    let theta = r.read_f64::<LE>()?;
    let t_max = r.read_f64::<LE>()?;
    let has_conj = r.read_u8()? != 0;
    let conj = r.read_f64::<LE>()?;
    let n_seg = r.read_u32::<LE>()? as usize;
    let mut segments = Vec::with_capacity(n_seg.min(1024));
    for _ in 0..n_seg {
        let chart = r.read_u32::<LE>()? as usize;
        if chart >= base.surface.charts().len() {
            bail!("chart index {chart} out of range");
        }
        let dim = r.read_u32::<LE>()? as usize;
        let nb = r.read_u32::<LE>()? as usize;
        if nb == 0 {
            bail!("empty segment");
        }
        let times = read_f64s(r, nb)?;
        let states = read_f64s(r, nb * dim)?;
        let cont = read_f64s(r, (nb - 1) * 3 * dim)?;
        segments.push(TraceSegment { chart, traj: DenseTrajectory::from_parts(dim, times, states, cont)? });
    }
    Ok(GeodesicTrace { base: base.clone(), theta, segments, t_max, conjugate_time: has_conj.then_some(conj) })
}

impl TraceCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    fn path_for(&self, key: &[u8; 32]) -> PathBuf {
        self.root.join(format!("{}.trc", hex::encode(key)))
    }

    /// Cached fan for this base point, or `None` on a miss. Corrupt entries
    /// are reported and treated as misses.
    pub fn load(&self, base: &BasePoint, opts: &CutOptions) -> Option<TraceSet> {
        let key = cache_key(base, opts);
        let path = self.path_for(&key);
        let bytes = fs::read(&path).ok()?;
        match decode(&bytes, &key, base, opts) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("warning: ignoring corrupt cache entry {}: {e:#}", path.display());
                None
            }
        }
    }

    /// Writes through a temporary file and a rename so readers never see a
    /// partial entry.
    pub fn store(&self, base: &BasePoint, opts: &CutOptions, set: &TraceSet) -> Result<()> {
        fs::create_dir_all(&self.root).with_context(|| format!("creating cache dir {}", self.root.display()))?;
        let key = cache_key(base, opts);
        let bytes = encode(&key, set);
        let path = self.path_for(&key);
        let tmp = self.root.join(format!(".{}.{}.{}.tmp", hex::encode(&key[..8]), std::process::id(), TMP_COUNTER.fetch_add(1, Ordering::Relaxed)));
        fs::write(&tmp, &bytes).with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, &path).with_context(|| format!("renaming into {}", path.display()))?;
        Ok(())
    }

    pub fn inspect(&self) -> Result<Vec<EntryInfo>> {
        let mut out = Vec::new();
        let Ok(rd) = fs::read_dir(&self.root) else {
            return Ok(out);
        };
        let mut paths: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|x| x == "trc")).collect();
        paths.sort();
        for p in paths {
            let bytes = fs::read(&p)?;
            let head = parse_header(&bytes).ok();
            out.push(EntryInfo {
                file: p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
                bytes: bytes.len() as u64,
                schema: head.map(|h| h.0),
                n_profile: head.map(|h| h.1),
                n_fan: head.map(|h| h.2),
                valid: checksum_ok(&bytes),
            });
        }
        Ok(out)
    }

    /// Removes every entry and stray temporary file; returns the count.
    pub fn clear(&self) -> Result<usize> {
        let Ok(rd) = fs::read_dir(&self.root) else {
            return Ok(0);
        };
        let mut n = 0;
        for e in rd.flatten() {
            let p = e.path();
            let name = p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
            if name.ends_with(".trc") || name.ends_with(".tmp") {
                fs::remove_file(&p).with_context(|| format!("removing {}", p.display()))?;
                n += 1;
            }
        }
        Ok(n)
    }
}

fn share_mode(n: usize, m: usize) -> u8 {
    if m.is_multiple_of(n) {
        0
    } else if n.is_multiple_of(m) {
        1
    } else {
        2
    }
}

fn encode(key: &[u8; 32], set: &TraceSet) -> Vec<u8> {
    let (n, m) = (set.profile.len(), set.fan.len());
    let share = share_mode(n, m);
    let mut w = Vec::new();
    w.extend_from_slice(MAGIC);
    w.write_u32::<LE>(SCHEMA).unwrap();
    w.extend_from_slice(key);
    w.write_u32::<LE>(n as u32).unwrap();
    w.write_u32::<LE>(m as u32).unwrap();
    w.write_u8(share).unwrap();
    let stored: Vec<&Arc<GeodesicTrace>> = match share {
        0 => set.fan.iter().collect(),
        1 => set.profile.iter().collect(),
        _ => set.profile.iter().chain(&set.fan).collect(),
    };
    for tr in stored {
        write_trace(&mut w, tr);
    }
    let sum = Sha256::digest(&w);
    w.extend_from_slice(&sum);
    w
}

fn checksum_ok(bytes: &[u8]) -> bool {
    bytes.len() > 32 && Sha256::digest(&bytes[..bytes.len() - 32]).as_slice() == &bytes[bytes.len() - 32..]
}

fn parse_header(bytes: &[u8]) -> Result<(u32, u32, u32)> {
    let mut r = Cursor::new(bytes);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        bail!("bad magic");
    }
    let schema = r.read_u32::<LE>()?;
    let mut key = [0u8; 32];
    r.read_exact(&mut key)?;
    Ok((schema, r.read_u32::<LE>()?, r.read_u32::<LE>()?))
}

fn decode(bytes: &[u8], key: &[u8; 32], base: &BasePoint, opts: &CutOptions) -> Result<TraceSet> {
    if !checksum_ok(bytes) {
        bail!("checksum mismatch");
    }
    let body = &bytes[..bytes.len() - 32];
    let mut r = Cursor::new(body);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        bail!("bad magic");
    }
    let schema = r.read_u32::<LE>()?;
    if schema != SCHEMA {
        bail!("schema {schema}, expected {SCHEMA}");
    }
    let mut stored_key = [0u8; 32];
    r.read_exact(&mut stored_key)?;
    if &stored_key != key {
        bail!("key mismatch");
    }
    let n = r.read_u32::<LE>()? as usize;
    let m = r.read_u32::<LE>()? as usize;
    if n != opts.n || m != opts.n_dist {
        bail!("grid sizes {n}/{m} do not match {}/{}", opts.n, opts.n_dist);
    }
    let share = r.read_u8()?;
    if share != share_mode(n, m) {
        bail!("inconsistent sharing flag");
    }
    let count = match share {
        0 => m,
        1 => n,
        _ => n + m,
    };
    let mut all = Vec::with_capacity(count);
    for _ in 0..count {
        all.push(Arc::new(read_trace(&mut r, base)?));
    }
    if r.position() != body.len() as u64 {
        bail!("trailing bytes");
    }
    Ok(match share {
        0 => TraceSet { profile: (0..n).map(|i| all[i * (m / n)].clone()).collect(), fan: all },
        1 => TraceSet { fan: (0..m).map(|j| all[j * (n / m)].clone()).collect(), profile: all },
        _ => {
            let fan = all.split_off(n);
            TraceSet { profile: all, fan }
        }
    })
}
