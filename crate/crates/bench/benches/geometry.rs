use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use isodiam::cutlocus::{compute_cut_profile, shooting_length, CutOptions};
use isodiam::geodesic::{shoot, DistanceOracle, OracleOptions};
use isodiam::highdim::{volume_highdim, SphericalProfile};
use isodiam::numerics::adaptive_quadrature;
use isodiam::symmetrize;
use isodiam_bench::{major_axis_point, triaxial, umbilic_point};

fn bench_shoot(c: &mut Criterion) {
    let s = triaxial();
    let p = major_axis_point(&s);
    let t = shooting_length(&p, CutOptions::default().length_factor);
    c.bench_function("shoot_triaxial_full_length", |b| b.iter(|| shoot(&p, black_box(0.7), t).unwrap()));
}

fn bench_oracle(c: &mut Criterion) {
    let s = triaxial();
    let p = major_axis_point(&s);
    let t = shooting_length(&p, 1.1);
    let o = DistanceOracle::new(&p, t, OracleOptions { n_dist: 128, ..Default::default() }).unwrap();
    let q = s.position(0, 2.0, 2.5);
    c.bench_function("oracle_distance_n128", |b| b.iter(|| o.distance(black_box(q)).unwrap()));
}

fn bench_profile(c: &mut Criterion) {
    let s = triaxial();
    let mut g = c.benchmark_group("cut_profile");
    g.sample_size(10);
    for n in [32, 64, 128] {
        let p = major_axis_point(&s);
        g.bench_with_input(BenchmarkId::new("major_axis", n), &n, |b, &n| b.iter(|| compute_cut_profile(&p, n).unwrap()));
    }
    let u = umbilic_point(&s);
    g.bench_function("umbilic_64", |b| b.iter(|| compute_cut_profile(&u, 64).unwrap()));
    g.finish();
}

fn bench_symmetrize(c: &mut Criterion) {
    let s = triaxial();
    let prof = compute_cut_profile(&major_axis_point(&s), 64).unwrap();
    let mut g = c.benchmark_group("symmetrize");
    g.sample_size(10);
    g.bench_function("build_m512", |b| b.iter(|| symmetrize::build(&prof, 512).unwrap()));
    g.finish();
}

fn bench_small(c: &mut Criterion) {
    c.bench_function("quadrature_ellipse_arc", |b| {
        b.iter(|| adaptive_quadrature(|t: f64| (t.sin().powi(2) + 0.25 * t.cos().powi(2)).sqrt(), 0.0, black_box(3.0), 1e-13).unwrap())
    });
    let p = SphericalProfile::double_ball(5, 2.0).unwrap();
    c.bench_function("highdim_volume_d5", |b| b.iter(|| volume_highdim(black_box(&p)).unwrap()));
}

criterion_group!(benches, bench_shoot, bench_oracle, bench_profile, bench_symmetrize, bench_small);
criterion_main!(benches);
