//! Deterministic JSON and the frozen CSV layouts.
//!
//! JSON: keys sorted, two-space indent, every float as `{:.16e}` (17
//! significant digits), integers verbatim, non-finite floats as null.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

use isodiam::cutlocus::CutProfile;
use isodiam::symmetrize::{EmbeddingSample, SymmetricProfile};

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, k: usize| out.extend(std::iter::repeat_n(' ', 2 * k));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN)));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(a) => {
            if a.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, x) in a.iter().enumerate() {
                pad(out, indent + 1);
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < a.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(m) => {
            if m.is_empty() {
                out.push_str("{}");
                return;
            }
            // serde_json's default map is ordered by key.
            out.push_str("{\n");
            for (i, (k, x)) in m.iter().enumerate() {
                pad(out, indent + 1);
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push_str(": ");
                write_value(out, x, indent + 1);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let value = serde_json::to_value(v).context("serializing report")?;
    let mut out = String::new();
    write_value(&mut out, &value, 0);
    out.push('\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    fs::write(path, to_json(v)?).with_context(|| format!("writing {}", path.display()))
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r.join(","));
        s.push('\n');
    }
    fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

pub fn cut_profile_csv(path: &Path, p: &CutProfile) -> Result<()> {
    write_rows(
        path,
        "theta,d,F_at_cut,d_prime,conjugate_flag",
        (0..p.n()).map(|i| {
            vec![
                fmt_f64(p.d.theta(i)),
                fmt_f64(p.d.values()[i]),
                fmt_f64(p.f_at_cut.values()[i]),
                fmt_f64(p.d_prime.values()[i]),
                u8::from(p.conjugate_flags[i]).to_string(),
            ]
        }),
    )
}

pub fn symmetric_csv(path: &Path, sp: &SymmetricProfile) -> Result<()> {
    write_rows(path, "s,f,k,f_prime", (0..sp.s.len()).map(|i| vec![fmt_f64(sp.s[i]), fmt_f64(sp.f[i]), fmt_f64(sp.k[i]), fmt_f64(sp.f_prime[i])]))
}

pub fn embedding_csv(path: &Path, e: &[EmbeddingSample]) -> Result<()> {
    write_rows(path, "s,r,z", e.iter().map(|x| vec![fmt_f64(x.s), fmt_f64(x.r), fmt_f64(x.z)]))
}

/// One row per named check.
pub fn checks_csv(path: &Path, checks: &[(String, bool, f64)]) -> Result<()> {
    write_rows(path, "name,pass,slack", checks.iter().map(|(n, p, s)| vec![n.clone(), u8::from(*p).to_string(), fmt_f64(*s)]))
}

#[derive(Debug, Clone, Copy)]
pub struct SweepRow {
    pub parameter: f64,
    pub area: f64,
    pub diameter: f64,
    pub ratio: f64,
    pub strong: f64,
    pub main: f64,
}

pub fn sweep_csv(path: &Path, rows: &[Option<SweepRow>], params: &[f64]) -> Result<()> {
    write_rows(
        path,
        "parameter,A,D,ratio,B_s,B_m",
        params.iter().zip(rows).map(|(p, r)| match r {
            Some(r) => vec![fmt_f64(r.parameter), fmt_f64(r.area), fmt_f64(r.diameter), fmt_f64(r.ratio), fmt_f64(r.strong), fmt_f64(r.main)],
            None => vec![fmt_f64(*p), "nan".into(), "nan".into(), "nan".into(), "nan".into(), "nan".into()],
        }),
    )
}
