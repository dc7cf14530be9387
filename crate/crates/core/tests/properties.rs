use std::f64::consts::PI;

use proptest::prelude::*;

use isodiam::geodesic::{angle_distance, shoot, wrap_angle, DistanceOracle, OracleOptions};
use isodiam::highdim::{bound_check_highdim, SphericalProfile};
use isodiam::numerics::{cumulative_integral, Pchip};
use isodiam::surface::{ellipsoid, sphere, BasePoint};
use isodiam::symmetrize::strong_bound;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wrapped_angles_stay_on_the_circle(t in -50.0f64..50.0, s in -50.0f64..50.0) {
        let w = wrap_angle(t);
        prop_assert!((0.0..2.0 * PI).contains(&w));
        let turns = (t - w) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-9);
        let d = angle_distance(t, s);
        prop_assert!((0.0..=PI + 1e-12).contains(&d));
        prop_assert!((d - angle_distance(s, t)).abs() < 1e-12);
        prop_assert!(angle_distance(t, t + 2.0 * PI) < 1e-9);
    }

    #[test]
    fn cumulative_integral_is_exact_on_cubics(c in prop::array::uniform4(-3.0f64..3.0), n in 4usize..40, h in 0.01f64..0.5) {
        let p = |x: f64| c[0] + x * (c[1] + x * (c[2] + x * c[3]));
        let prim = |x: f64| x * (c[0] + x * (c[1] / 2.0 + x * (c[2] / 3.0 + x * c[3] / 4.0)));
        let y: Vec<f64> = (0..n).map(|i| p(i as f64 * h)).collect();
        let out = cumulative_integral(&y, h);
        let scale = 1.0 + out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (i, v) in out.iter().enumerate() {
            prop_assert!((v - prim(i as f64 * h)).abs() < 1e-11 * scale, "i = {i}: {v} vs {}", prim(i as f64 * h));
        }
    }

    #[test]
    fn pchip_keeps_monotone_data_monotone(steps in prop::collection::vec((0.05f64..1.0, 0.0f64..2.0), 3..20)) {
        let mut x = vec![0.0];
        let mut y = vec![0.0];
        for (dx, dy) in &steps {
            x.push(x.last().unwrap() + dx);
            y.push(y.last().unwrap() + dy);
        }
        let end = *x.last().unwrap();
        let p = Pchip::new(x, y).unwrap();
        let mut prev = p.eval(0.0);
        for i in 1..=400 {
            let v = p.eval(end * i as f64 / 400.0);
            prop_assert!(v >= prev - 1e-12);
            prev = v;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn jacobi_field_is_below_comparison(a in 0.6f64..1.4, b in 0.6f64..1.4, c in 0.6f64..1.4, u in 0.3f64..2.8, v in 0.0f64..6.2, th in 0.0f64..6.2) {
        let mut ax = [a, b, c];
        ax.sort_by(|p, q| q.partial_cmp(p).unwrap());
        let s = ellipsoid(ax[0], ax[1], ax[2]).unwrap();
        let p = BasePoint::new(&s, 0, u, v).unwrap();
        let tr = shoot(&p, th, 3.0).unwrap();
        for (_, t, st) in tr.breakpoints() {
            prop_assert!(st[4] <= t + 1e-8, "F({t}) = {}", st[4]);
        }
        prop_assert!(tr.max_speed_drift() < 1e-7);
    }

    #[test]
    fn gauss_bonnet_on_random_ellipsoids(x in 0.3f64..2.0, y in 0.3f64..2.0, z in 0.3f64..2.0) {
        let mut ax = [x, y, z];
        ax.sort_by(|p, q| q.partial_cmp(p).unwrap());
        let s = ellipsoid(ax[0], ax[1], ax[2]).unwrap();
        let k = s.total_curvature().unwrap();
        prop_assert!((k - 4.0 * PI).abs() < 1e-3 * 4.0 * PI, "{k}");
    }

    #[test]
    fn sphere_distance_is_the_great_circle_angle(u in 0.2f64..2.9, v in 0.0f64..6.2, r in 0.5f64..2.0) {
        let s = sphere(r).unwrap();
        let p = BasePoint::new(&s, 0, 1.1, 0.4).unwrap();
        let o = DistanceOracle::new(&p, 1.1 * PI * r, OracleOptions { n_dist: 32, ..Default::default() }).unwrap();
        let q = s.position(0, u, v);
        let pp = p.position();
        let cos = (pp[0] * q[0] + pp[1] * q[1] + pp[2] * q[2]) / (r * r);
        let want = r * cos.clamp(-1.0, 1.0).acos();
        let got = o.distance(q).unwrap().length;
        prop_assert!((got - want).abs() < 1e-6 * r, "{got} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn double_balls_are_sharp_at_every_scale(d in 2usize..7, diam in 0.2f64..5.0) {
        let b = bound_check_highdim(&SphericalProfile::double_ball(d, diam).unwrap()).unwrap();
        prop_assert!(b.pass && b.slack.abs() < 1e-8);
    }

    #[test]
    fn highdim_ratio_is_scale_invariant(d in 2usize..7, r in 0.2f64..5.0) {
        let unit = bound_check_highdim(&SphericalProfile::sine(d).unwrap()).unwrap();
        let scaled = bound_check_highdim(&SphericalProfile::scaled_sine(d, r, 1.0).unwrap()).unwrap();
        prop_assert!((unit.ratio - scaled.ratio).abs() < 1e-9 * unit.ratio);
        prop_assert!(scaled.pass);
    }

    #[test]
    fn strong_bound_is_monotone_on_the_admissible_range(m in 0.0f64..(2.0 * PI), dm in 0.0f64..0.5) {
        let m2 = (m + dm).min(2.0 * PI);
        prop_assert!(strong_bound(m) >= 0.5 * PI);
        prop_assert!(strong_bound(m2) >= strong_bound(m) - 1e-15);
    }
}
