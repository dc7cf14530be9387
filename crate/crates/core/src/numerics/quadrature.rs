//! Quadrature on intervals: adaptive Gauss–Kronrod and cumulative sums on
//! uniform grids.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Maximum number of subintervals kept by [`adaptive_quadrature`].
pub const MAX_SUBDIVISIONS: usize = 2000;

/// One G7–K15 panel: (kronrod estimate, error estimate).
pub fn gauss_kronrod_15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    est: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Integrates `f` over `[a, b]` to absolute error `tol` by globally adaptive
/// bisection of the panel with the largest error estimate.
pub fn adaptive_quadrature<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a < b) {
        return Err(Error::InvalidParameter(format!("empty quadrature interval [{a}, {b}]")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("quadrature tolerance must be positive".into()));
    }
    let (est, err) = gauss_kronrod_15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, est, err });
    let mut total = est;
    let mut total_err = err;
    while total_err > tol {
        if heap.len() >= MAX_SUBDIVISIONS {
            return Err(Error::Quadrature { estimate: total, error: total_err });
        }
        let p = heap.pop().unwrap();
        let m = 0.5 * (p.a + p.b);
        if !(m > p.a && m < p.b) {
            // Panel can no longer be split in floating point.
            return Err(Error::Quadrature { estimate: total, error: total_err });
        }
        let (e1, r1) = gauss_kronrod_15(&mut f, p.a, m);
        let (e2, r2) = gauss_kronrod_15(&mut f, m, p.b);
        total += e1 + e2 - p.est;
        total_err += r1 + r2 - p.err;
        heap.push(Panel { a: p.a, b: m, est: e1, err: r1 });
        heap.push(Panel { a: m, b: p.b, est: e2, err: r2 });
        if !total.is_finite() {
            return Err(Error::Quadrature { estimate: total, error: f64::INFINITY });
        }
    }
    // Re-sum in a fixed order to avoid drift from the running updates.
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(panels.iter().map(|p| p.est).sum())
}

/// Cumulative integral of uniformly spaced samples `y` with spacing `h`.
///
/// Interior panels integrate the cubic through y_{j−1..j+2}:
/// h/24·(−y_{j−1} + 13y_j + 13y_{j+1} − y_{j+2}); the end panels use the
/// one-sided cubic h/24·(9, 19, −5, 1). Fewer than four samples fall back to
/// lower order. `out[0] = 0`.
pub fn cumulative_integral(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut out = vec![0.0; n];
    if n < 2 {
        return out;
    }
    if n == 2 {
        out[1] = 0.5 * h * (y[0] + y[1]);
        return out;
    }
    if n == 3 {
        out[1] = h / 12.0 * (5.0 * y[0] + 8.0 * y[1] - y[2]);
        out[2] = out[1] + h / 12.0 * (5.0 * y[2] + 8.0 * y[1] - y[0]);
        return out;
    }
    for j in 0..n - 1 {
        let panel = if j == 0 {
            h / 24.0 * (9.0 * y[0] + 19.0 * y[1] - 5.0 * y[2] + y[3])
        } else if j + 2 < n {
            h / 24.0 * (-y[j - 1] + 13.0 * y[j] + 13.0 * y[j + 1] - y[j + 2])
        } else {
            h / 24.0 * (9.0 * y[j + 1] + 19.0 * y[j] - 5.0 * y[j - 1] + y[j - 2])
        };
        out[j + 1] = out[j] + panel;
    }
    out
}

/// Composite Simpson rule on uniform samples (trapezoid on a trailing odd panel).
pub fn simpson(y: &[f64], h: f64) -> f64 {
    let n = y.len();
    if n < 2 {
        return 0.0;
    }
    let panels = n - 1;
    let even = panels - panels % 2;
    let mut s = 0.0;
    for j in (0..even).step_by(2) {
        s += y[j] + 4.0 * y[j + 1] + y[j + 2];
    }
    s *= h / 3.0;
    if panels % 2 == 1 {
        s += 0.5 * h * (y[n - 2] + y[n - 1]);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrates_sine_over_half_period() {
        let v = adaptive_quadrature(f64::sin, 0.0, PI, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn integrates_identity() {
        let v = adaptive_quadrature(|s| s, 0.0, 1.0, 1e-14).unwrap();
        assert!((v - 0.5).abs() < 1e-14);
    }

    #[test]
    fn double_ball_profile_gives_triangle_area() {
        let d = 2.7;
        let v = adaptive_quadrature(|s: f64| s.min(d - s), 0.0, d, 1e-13).unwrap();
        assert!((v - d * d / 4.0).abs() < 1e-12);
    }

    #[test]
    fn reports_failure_on_non_integrable_singularity() {
        let r = adaptive_quadrature(|s: f64| 1.0 / s, 0.0, 1.0, 1e-10);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn cumulative_integral_is_exact_for_cubics() {
        let h = 0.1;
        let y: Vec<f64> = (0..21).map(|i| (i as f64 * h).powi(3) - i as f64 * h).collect();
        let c = cumulative_integral(&y, h);
        for (i, v) in c.iter().enumerate() {
            let x = i as f64 * h;
            assert!((v - (x.powi(4) / 4.0 - x * x / 2.0)).abs() < 1e-13);
        }
    }

    #[test]
    fn cumulative_integral_is_fourth_order() {
        let err = |n: usize| {
            let h = PI / n as f64;
            let y: Vec<f64> = (0..=n).map(|i| (i as f64 * h).cos()).collect();
            let c = cumulative_integral(&y, h);
            (0..=n).map(|i| (c[i] - (i as f64 * h).sin()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(64) / err(128);
        assert!(ratio > 14.0, "ratio {ratio}");
    }
}
