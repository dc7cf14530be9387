use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

/// Closed-form ellipsoid curvature K = 1 / (a²b²c² h²), h = Σ x_i²/a_i⁴.
fn ellipsoid_k(a: f64, b: f64, c: f64, p: Vec3) -> f64 {
    let h = p[0] * p[0] / a.powi(4) + p[1] * p[1] / b.powi(4) + p[2] * p[2] / c.powi(4);
    1.0 / (a * a * b * b * c * c * h * h)
}

#[test]
fn sphere_basics() {
    let s = sphere(1.0).unwrap();
    assert!((norm(s.position(0, PI / 2.0, 0.3)) - 1.0).abs() < 1e-15);
    let g = metric_at(&s, PI / 2.0, 0.7).unwrap();
    assert!((g.g_uu - 1.0).abs() < 1e-15 && g.g_uv.abs() < 1e-15 && (g.g_vv - 1.0).abs() < 1e-15);
    let u = 0.9;
    let g = metric_at(&s, u, 0.1).unwrap();
    assert!((g.g_vv - u.sin().powi(2)).abs() < 1e-15);
    let ch = christoffel_at(&s, u, 0.1).unwrap();
    assert!((ch.get(0, 1, 1) + u.sin() * u.cos()).abs() < 1e-14);
    let s2 = sphere(2.0).unwrap();
    assert!((gauss_curvature_at(&s2, 1.1, 2.0).unwrap() - 0.25).abs() < 1e-12);
    assert!((s.extrinsic_area().unwrap() - 4.0 * PI).abs() < 1e-9);
}

#[test]
fn invalid_parameters_are_rejected() {
    assert!(sphere(0.0).is_err());
    assert!(ellipsoid(1.0, -1.0, 0.5).is_err());
    assert!(ellipsoid(0.5, 1.0, 0.2).is_err());
}

#[test]
fn singular_band_is_reported() {
    let s = sphere(1.0).unwrap();
    assert!(matches!(metric_at(&s, 1e-8, 0.0), Err(Error::SingularChart { .. })));
    assert!(metric_at(&s, 1e-3, 0.0).is_ok());
}

#[test]
fn oblate_pole_curvature_matches_closed_form() {
    let s = ellipsoid(1.0, 1.0, 0.5).unwrap();
    let pole = BasePoint::at_point(&s, [0.0, 0.0, 0.5]).unwrap();
    let k = pole.geometry().gauss;
    assert!((k - 0.25).abs() < 1e-12);
    assert!((k - ellipsoid_k(1.0, 1.0, 0.5, [0.0, 0.0, 0.5])).abs() < 1e-12);
}

#[test]
fn triaxial_curvature_matches_oracle_at_random_points() {
    let (a, b, c) = (1.0, 0.8, 0.6);
    let s = ellipsoid(a, b, c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let u = rng.gen_range(0.01..PI - 0.01);
        let v = rng.gen_range(0.0..2.0 * PI);
        let k = gauss_curvature_at(&s, u, v).unwrap();
        let x = s.position(0, u, v);
        assert!(k > 0.0);
        assert!((k - ellipsoid_k(a, b, c, x)).abs() < 1e-8 * k.max(1.0));
        assert!(metric_at(&s, u, v).unwrap().det() > 0.0);
    }
}

#[test]
fn second_chart_agrees_with_first() {
    let s = ellipsoid(1.0, 0.8, 0.6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let (u, v) = (rng.gen_range(0.3..2.8), rng.gen_range(0.0..6.2));
        let p = s.position(0, u, v);
        let (u2, v2) = s.chart(1).invert(p).unwrap();
        let p2 = s.position(1, u2, v2);
        assert!(norm(sub(p, p2)) < 1e-13);
        let (g1, g2) = (s.geometry(0, u, v).unwrap(), s.geometry(1, u2, v2).unwrap());
        assert!((g1.gauss - g2.gauss).abs() < 1e-11);
        assert!(norm(sub(g1.normal, g2.normal)) < 1e-12, "normals disagree");
        assert!(dot(g1.normal, p) > 0.0);
    }
}

#[test]
fn christoffels_match_finite_differences_of_the_metric() {
    let s = ellipsoid(1.0, 0.8, 0.6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let h = 1e-5;
    for _ in 0..50 {
        let (u, v) = (rng.gen_range(0.3..2.8), rng.gen_range(0.0..6.2));
        let g = |u, v| {
            let m = metric_at(&s, u, v).unwrap();
            [[m.g_uu, m.g_uv], [m.g_uv, m.g_vv]]
        };
        // ∂_k g_ij by central differences.
        let dg: Vec<[[f64; 2]; 2]> = (0..2)
            .map(|k| {
                let (du, dv) = if k == 0 { (h, 0.0) } else { (0.0, h) };
                let (p, m) = (g(u + du, v + dv), g(u - du, v - dv));
                [
                    [(p[0][0] - m[0][0]) / (2.0 * h), (p[0][1] - m[0][1]) / (2.0 * h)],
                    [(p[1][0] - m[1][0]) / (2.0 * h), (p[1][1] - m[1][1]) / (2.0 * h)],
                ]
            })
            .collect();
        let g0 = g(u, v);
        let det = g0[0][0] * g0[1][1] - g0[0][1] * g0[1][0];
        let ginv = [[g0[1][1] / det, -g0[0][1] / det], [-g0[1][0] / det, g0[0][0] / det]];
        let ch = christoffel_at(&s, u, v).unwrap();
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut val = 0.0;
                    for l in 0..2 {
                        val += 0.5 * ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                    }
                    assert!((val - ch.get(k, i, j)).abs() < 1e-6, "Γ^{k}_{i}{j}");
                }
            }
        }
        assert_eq!(ch.get(0, 0, 1), ch.get(0, 1, 0));
    }
}

#[test]
fn plane_has_vanishing_christoffels() {
    let s = plane_patch();
    let ch = christoffel_at(&s, 0.2, -0.4).unwrap();
    assert!(ch.as_array().iter().all(|&x| x == 0.0));
    assert_eq!(gauss_curvature_at(&s, 0.2, -0.4).unwrap(), 0.0);
}

#[test]
fn oblate_area_matches_closed_form() {
    let (a, c) = (1.0f64, 0.5f64);
    let e = (1.0 - c * c / (a * a)).sqrt();
    let exact = 2.0 * PI * a * a * (1.0 + (1.0 - e * e) / e * e.atanh());
    let s = ellipsoid(a, a, c).unwrap();
    let area = s.extrinsic_area().unwrap();
    assert!((area - exact).abs() < 1e-8 * exact);
    // The quoted reference value 8.6716 is a 4-digit rounding of 8.67188...
    assert!((area - 8.6716).abs() < 5e-4);
}

#[test]
fn triaxial_area_matches_brute_force_midpoint_rule() {
    let s = ellipsoid(1.0, 0.8, 0.6).unwrap();
    let area = s.extrinsic_area().unwrap();
    // Independent midpoint rule on a fine grid.
    let (nu, nv) = (1600, 400);
    let chart = s.chart(0);
    let mut brute = 0.0;
    for i in 0..nu {
        let u = (i as f64 + 0.5) * PI / nu as f64;
        for j in 0..nv {
            let v = (j as f64 + 0.5) * 2.0 * PI / nv as f64;
            let jt = chart.jet(u, v);
            brute += norm(cross(jt.xu, jt.xv));
        }
    }
    brute *= PI / nu as f64 * 2.0 * PI / nv as f64;
    assert!((area - brute).abs() < 1e-6 * area, "{area} vs {brute}");
}

#[test]
fn total_curvature_is_four_pi() {
    for s in [
        sphere(1.0).unwrap(),
        ellipsoid(1.0, 1.0, 0.5).unwrap(),
        ellipsoid(1.0, 0.8, 0.6).unwrap(),
        surface_of_revolution(Arc::new(TangentAngleProfile::new(3.0, vec![0.2, -0.05]).unwrap())).unwrap(),
    ] {
        let tc = s.total_curvature().unwrap();
        assert!((tc - 4.0 * PI).abs() < 1e-6 * 4.0 * PI, "{}: {tc}", s.descriptor().name);
    }
}

#[test]
fn convexity_certificate_on_grid() {
    for s in [ellipsoid(1.0, 0.8, 0.6).unwrap(), ellipsoid(1.0, 1.0, 0.15).unwrap()] {
        for i in 0..200 {
            for j in 0..200 {
                let u = 0.01 + (PI - 0.02) * i as f64 / 199.0;
                let v = 2.0 * PI * j as f64 / 200.0;
                assert!(gauss_curvature_at(&s, u, v).unwrap() >= -1e-10);
            }
        }
    }
}

#[test]
fn ellipsoid_with_equal_axes_is_the_sphere() {
    let (e, s) = (ellipsoid(1.5, 1.5, 1.5).unwrap(), sphere(1.5).unwrap());
    for (u, v) in [(0.3, 0.1), (1.7, 4.0), (2.9, 2.2)] {
        let (a, b) = (e.geometry(0, u, v).unwrap(), s.geometry(0, u, v).unwrap());
        assert!(norm(sub(a.jet.x, b.jet.x)) < 1e-10);
        assert!((a.metric.g_vv - b.metric.g_vv).abs() < 1e-10);
        assert!((a.gauss - b.gauss).abs() < 1e-10);
    }
}

#[test]
fn revolution_sphere_has_unit_curvature_in_all_charts() {
    for r in [1.0, 2.0] {
        let s = surface_of_revolution(Arc::new(TangentAngleProfile::sphere(r).unwrap())).unwrap();
        for (chart, u, v) in [(0, 0.5 * r, 0.3), (0, 2.0 * r, 5.0), (1, 0.1 * r, -0.2 * r), (2, 0.0, 0.0), (1, 0.0, 0.0)] {
            let g = s.geometry(chart, u, v).unwrap();
            assert!((g.gauss - 1.0 / (r * r)).abs() < 1e-9, "chart {chart}: {}", g.gauss);
            assert!((norm(g.jet.x) - r).abs() < 1e-12);
            assert!(dot(g.normal, g.jet.x) > 0.0, "outward normal in chart {chart}");
        }
        assert!((s.extrinsic_area().unwrap() - 4.0 * PI * r * r).abs() < 1e-8);
    }
}

#[test]
fn revolution_curvature_is_minus_rho_pp_over_rho() {
    let p = Arc::new(TangentAngleProfile::new(3.0, vec![0.2]).unwrap());
    let s = surface_of_revolution(p.clone()).unwrap();
    for i in 1..20 {
        let t = 3.0 * i as f64 / 20.0;
        let q = p.eval(t);
        let k = s.geometry(0, t, 1.0).unwrap().gauss;
        assert!((k + q.ddrho / q.rho).abs() < 1e-8 * k.abs().max(1.0));
    }
}

#[test]
fn spheroid_generatrix_matches_ellipsoid() {
    let prof = Arc::new(EllipseMeridianProfile::new(1.0, 0.5).unwrap());
    let rev = surface_of_revolution(prof.clone()).unwrap();
    let ell = ellipsoid(1.0, 1.0, 0.5).unwrap();
    for i in 1..30 {
        let s = prof.length() * i as f64 / 30.0;
        let p = rev.position(0, s, 0.4);
        let (c, u, v, _) = rev.best_chart(p).unwrap();
        let k_rev = rev.geometry(c, u, v).unwrap().gauss;
        let (ce, ue, ve, _) = ell.best_chart(p).unwrap();
        let k_ell = ell.geometry(ce, ue, ve).unwrap().gauss;
        assert!((k_rev - k_ell).abs() < 1e-6, "s = {s}: {k_rev} vs {k_ell}");
    }
}

#[test]
fn cap_and_meridian_charts_agree() {
    let p = Arc::new(TangentAngleProfile::new(3.0, vec![0.15]).unwrap());
    let s = surface_of_revolution(p.clone()).unwrap();
    for &(sv, top) in &[(0.3, false), (2.8, true)] {
        let x = s.position(0, sv, 0.7);
        let cap = if top { 2 } else { 1 };
        let (u, v) = s.chart(cap).invert(x).unwrap();
        let (a, b) = (s.geometry(0, sv, 0.7).unwrap(), s.geometry(cap, u, v).unwrap());
        assert!(norm(sub(a.jet.x, b.jet.x)) < 1e-12);
        assert!((a.gauss - b.gauss).abs() < 1e-8);
        assert!(norm(sub(a.normal, b.normal)) < 1e-10);
        let (sv2, _) = s.chart(0).invert(x).unwrap();
        assert!((sv2 - sv).abs() < 1e-10);
    }
}

#[test]
fn non_closing_profiles_are_rejected() {
    #[derive(Debug)]
    struct Line;
    impl ArclengthProfile for Line {
        fn length(&self) -> f64 {
            1.0
        }
        fn eval(&self, s: f64) -> ProfilePoint {
            ProfilePoint { rho: s, drho: 1.0, ddrho: 0.0, z: 0.0, dz: 0.0, ddz: 0.0 }
        }
        fn descriptor(&self) -> (String, Vec<(String, f64)>) {
            ("line".into(), vec![])
        }
    }
    assert!(surface_of_revolution(Arc::new(Line)).is_err());
    assert!(TangentAngleProfile::new(3.0, vec![0.6]).is_err());
}

#[test]
fn umbilics_have_equal_principal_curvatures() {
    let (a, b, c) = (1.0, 0.8, 0.6);
    let s = ellipsoid(a, b, c).unwrap();
    let ps = ellipsoid_umbilics(a, b, c);
    assert_eq!(ps.len(), 4);
    for p in ps {
        assert!((p[0] * p[0] / (a * a) + p[2] * p[2] / (c * c) - 1.0).abs() < 1e-14);
        let bp = BasePoint::at_point(&s, p).unwrap();
        let (k1, k2) = bp.geometry().principal_curvatures();
        assert!((k1 - k2).abs() < 1e-8, "{k1} vs {k2}");
    }
}

#[test]
fn base_point_frame_is_orthonormal_and_oriented() {
    let s = ellipsoid(1.0, 0.8, 0.6).unwrap();
    for p in [[1.0, 0.0, 0.0], [0.0, 0.0, 0.6], [0.0, 0.8, 0.0]] {
        let bp = BasePoint::at_point(&s, p).unwrap();
        assert!(norm(sub(bp.position(), p)) < 1e-14);
        let g = bp.geometry();
        assert!((g.metric.inner(bp.e1, bp.e1) - 1.0).abs() < 1e-12);
        assert!((g.metric.inner(bp.e2, bp.e2) - 1.0).abs() < 1e-12);
        assert!(g.metric.inner(bp.e1, bp.e2).abs() < 1e-12);
        let (_, t0) = bp.direction(0.0);
        let (_, t1) = bp.direction(PI / 2.0);
        assert!(dot(cross(t0, t1), g.normal) > 0.99);
    }
}

#[test]
fn finite_difference_chart_matches_analytic_jet() {
    let domain = ChartDomain { u: (0.0, PI), v: (0.0, 2.0 * PI), u_periodic: false, v_periodic: true };
    let fd = from_position_map("fd-ellipsoid", domain, Arc::new(|u: f64, v: f64| [u.sin() * v.cos(), 0.8 * u.sin() * v.sin(), 0.6 * u.cos()]), true)
        .unwrap();
    let s = ellipsoid(1.0, 0.8, 0.6).unwrap();
    for (u, v) in [(0.7, 0.2), (1.9, 3.3)] {
        let (a, b) = (fd.geometry(0, u, v).unwrap(), s.geometry(0, u, v).unwrap());
        assert!((a.gauss - b.gauss).abs() < 1e-6);
        for k in 0..8 {
            assert!((a.christoffel.as_array()[k] - b.christoffel.as_array()[k]).abs() < 1e-6);
        }
    }
}
