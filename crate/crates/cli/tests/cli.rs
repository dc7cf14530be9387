use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_isodiam");

fn run(args: &[&str], cache: &Path) -> Output {
    Command::new(BIN).args(args).env("ISODIAM_CACHE_DIR", cache).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SMALL_ELLIPSOID: &str =
    "[surface]\nkind = \"ellipsoid\"\na = 1.0\nb = 0.8\nc = 0.6\n[base_points]\ngrid = 2\n[grid]\nn_theta = 32\nm = 128\nn_dist = 32\n";

#[test]
fn sphere_analyze_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", "[surface]\nkind = \"sphere\"\nradius = 1.0\n[grid]\nn_theta = 32\nm = 256\nn_dist = 32\n");
    let out = dir.path().join("out");
    let o = run(&["analyze", "--config", &cfg, "--out", out.to_str().unwrap()], &dir.path().join("cache"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&out.join("report.json"));
    let ratio = rep["report"]["ratio"].as_f64().unwrap();
    assert!((ratio - 4.0 / std::f64::consts::PI).abs() < 1e-6);
    assert_eq!(rep["schema_version"], 1);
    let csv = fs::read_to_string(out.join("cut_profile.pole_z.csv")).unwrap();
    assert!(csv.starts_with("theta,d,F_at_cut,d_prime,conjugate_flag\n"));
    assert_eq!(csv.lines().count(), 33);
    assert!(fs::read_to_string(out.join("symmetric.pole_z.csv")).unwrap().starts_with("s,f,k,f_prime\n"));
    assert!(fs::read_to_string(out.join("embedding.pole_z.csv")).unwrap().starts_with("s,r,z\n"));
    assert!(fs::read_to_string(out.join("checks.csv")).unwrap().starts_with("name,pass,slack\n"));
    assert!(out.join("timing.json").exists());
}

#[test]
fn truncated_shooting_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "t.toml", &format!("{SMALL_ELLIPSOID}[tolerances]\nlength_factor = 0.2\n"));
    let out = dir.path().join("out");
    let o = run(&["analyze", "--config", &cfg, "--out", out.to_str().unwrap(), "--no-cache"], &dir.path().join("cache"));
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("t_max too small"), "{err}");
    assert_eq!(json(&out.join("failure.json"))["status"], "numerical_failure");
}

#[test]
fn reports_are_independent_of_workers_and_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.toml", SMALL_ELLIPSOID);
    let cache = dir.path().join("cache");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    assert_eq!(run(&["analyze", "--config", &cfg, "--out", a.to_str().unwrap(), "--workers", "1"], &cache).status.code(), Some(0));
    assert_eq!(run(&["analyze", "--config", &cfg, "--out", b.to_str().unwrap(), "--workers", "8"], &cache).status.code(), Some(0));
    assert_eq!(run(&["analyze", "--config", &cfg, "--out", c.to_str().unwrap(), "--no-cache"], &cache).status.code(), Some(0));
    let ra = fs::read(a.join("report.json")).unwrap();
    assert_eq!(ra, fs::read(b.join("report.json")).unwrap());
    assert_eq!(ra, fs::read(c.join("report.json")).unwrap());
    // The second run read every fan from the cache.
    let timing = json(&b.join("timing.json"));
    assert!(timing["points"].as_array().unwrap().iter().all(|p| p["cache_hit"] == true));

    let o = run(&["cache", "inspect"], &cache);
    assert!(String::from_utf8_lossy(&o.stdout).contains(" ok"));
    let o = run(&["cache", "clear"], &cache);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 0);
}

#[test]
fn corrupt_cache_entry_is_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.toml", &SMALL_ELLIPSOID.replace("grid = 2", "grid = 0\nnamed = [\"axis_x\"]"));
    let cache = dir.path().join("cache");
    let a = dir.path().join("a");
    assert_eq!(run(&["analyze", "--config", &cfg, "--out", a.to_str().unwrap()], &cache).status.code(), Some(0));
    for e in fs::read_dir(&cache).unwrap() {
        let p = e.unwrap().path();
        let mut bytes = fs::read(&p).unwrap();
        bytes.truncate(bytes.len() / 3);
        fs::write(&p, bytes).unwrap();
    }
    let b = dir.path().join("b");
    let o = run(&["analyze", "--config", &cfg, "--out", b.to_str().unwrap()], &cache);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("corrupt cache entry"));
    assert_eq!(fs::read(a.join("report.json")).unwrap(), fs::read(b.join("report.json")).unwrap());
}

#[test]
fn config_errors_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cfg = write(dir.path(), "bad.toml", "[surface]\nkind = \"sphere\"\nradius = 1.0\nradios = 2.0\n");
    let o = run(&["analyze", "--config", &cfg], &cache);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("radios"));

    let cfg = write(dir.path(), "s.toml", "[surface]\nkind = \"sphere\"\nradius = 1.0\n[grid]\nn_theta = 32\nm = 128\nn_dist = 32\n");
    let out = dir.path().join("out");
    let o = run(&["analyze", "--config", &cfg, "--out", out.to_str().unwrap(), "--checks", "no_such_check"], &cache);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["analyze", "--config", &cfg, "--out", out.to_str().unwrap(), "--checks", "conjecture,total_curvature"], &cache);
    assert_eq!(o.status.code(), Some(0));
    let checks = fs::read_to_string(out.join("checks.csv")).unwrap();
    assert_eq!(checks.lines().count(), 3);
}

#[test]
fn sphere_sweep_has_constant_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sw.toml",
        "[surface]\nkind = \"sphere\"\nradius = 1.0\n[grid]\nn_theta = 32\nm = 128\nn_dist = 32\n[sweep]\nparameter = \"radius\"\nvalues = [0.5, 1.0, 2.0]\n",
    );
    let out = dir.path().join("out");
    let o = run(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()], &dir.path().join("cache"));
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("parameter,A,D,ratio,B_s,B_m"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!((r[3] - 4.0 / std::f64::consts::PI).abs() < 1e-6);
        assert!((r[4] - 0.5 * std::f64::consts::PI).abs() < 1e-6);
    }
}

#[test]
fn highdim_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cfg = write(
        dir.path(),
        "h.toml",
        "[highdim]\nprofiles = [\n  { kind = \"sin\", dims = [2, 3, 4, 5, 6] },\n  { kind = \"double-ball\", diameter = 2.0, dims = [2, 3, 4, 5, 6] },\n  { kind = \"csv\", path = \"tri.csv\", dims = [3] },\n]\n",
    );
    let mut tri = String::from("s,f\n");
    for i in 0..=100 {
        let s = i as f64 / 50.0;
        tri.push_str(&format!("{s},{}\n", s.min(2.0 - s)));
    }
    write(dir.path(), "tri.csv", &tri);
    let out = dir.path().join("out");
    let o = run(&["highdim", "--config", &cfg, "--out", out.to_str().unwrap()], &cache);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let doc = json(&out.join("highdim.json"));
    for row in doc["rows"].as_array().unwrap() {
        if row["profile"].as_str().unwrap() != "sin" {
            assert!(row["bound"]["slack"].as_f64().unwrap().abs() < 1e-8);
        }
    }

    let cfg = write(dir.path(), "bad.toml", "[highdim]\nprofiles = [{ kind = \"scaled-sin\", radius = 1.0, amp = 2.0, dims = [3] }]\n");
    let o = run(&["highdim", "--config", &cfg, "--out", out.to_str().unwrap()], &cache);
    assert_eq!(o.status.code(), Some(1));
}
