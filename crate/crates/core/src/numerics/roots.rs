//! Scalar root finding and minimization, plus zero search on trajectories.

use super::ode::DenseTrajectory;

/// Brent's method on a bracket `[a, b]` with `fa`, `fb` of opposite sign
/// (or one of them zero). Returns `None` if the bracket is invalid.
pub fn brent_root<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (a, b);
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return None;
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Some(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Some(b)
}

/// Brent minimization of `f` on `[a, b]`. Returns `(x_min, f(x_min))`.
pub fn brent_min<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = if a < b { (a, b) } else { (b, a) };
    let mut x = a + CGOLD * (b - a);
    let mut w = x;
    let mut v = x;
    let mut fx = f(x);
    let mut fw = fx;
    let mut fv = fx;
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = xtol + 1e-12 * x.abs();
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, fx)
}

/// Absolute tolerance of the refined zero returned by [`first_zero`].
pub const ZERO_TOL: f64 = 1e-10;

/// Sub-samples per integrator step used to detect sign changes.
const SUBSAMPLES: usize = 8;

/// Smallest `t > t_min` where component `k` changes sign, or touches zero
/// (|value| < 1e-10 at a local minimum of |value|).
pub fn first_zero(traj: &DenseTrajectory, component: usize, t_min: f64) -> Option<f64> {
    if component >= traj.dim() || t_min < traj.t_start() || t_min >= traj.t_end() {
        return None;
    }
    let val = |t: f64| traj.eval_component(t, component).unwrap_or(f64::NAN);
    let bps = traj.breakpoints();
    let start = bps.partition_point(|&x| x <= t_min).saturating_sub(1);

    let mut t_prev = t_min;
    let mut y_prev = val(t_min);
    if y_prev == 0.0 {
        // Sitting on a zero at t_min: look strictly beyond it.
        t_prev = (t_min + ZERO_TOL).min(traj.t_end());
        y_prev = val(t_prev);
    }
    // |y| history for touch detection: (t, |y|) of the two previous samples.
    let mut hist: Option<(f64, f64)> = None;

    for i in start..bps.len() - 1 {
        let (ta, tb) = (bps[i].max(t_min), bps[i + 1]);
        if tb <= t_prev {
            continue;
        }
        for j in 1..=SUBSAMPLES {
            let t = ta + (tb - ta) * j as f64 / SUBSAMPLES as f64;
            if t <= t_prev {
                continue;
            }
            let y = val(t);
            if y == 0.0 {
                return Some(t);
            }
            if y.signum() != y_prev.signum() {
                return brent_root(val, t_prev, t, ZERO_TOL, 200);
            }
            if let Some((t0, a0)) = hist {
                // Local minimum of |y| at t_prev: check for a tangential touch.
                if y_prev.abs() <= a0 && y_prev.abs() <= y.abs() {
                    let (tm, am) = brent_min(|s| val(s).abs(), t0, t, 1e-12, 200);
                    if am < ZERO_TOL {
                        return Some(tm);
                    }
                }
            }
            hist = Some((t_prev, y_prev.abs()));
            t_prev = t;
            y_prev = y;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::ode::{integrate, FnSystem, OdeProblem};

    #[test]
    fn brent_root_finds_cubic_root() {
        let r = brent_root(|x| x * x * x - 2.0, 0.0, 2.0, 1e-14, 100).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-13);
        assert!(brent_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_none());
    }

    #[test]
    fn brent_min_finds_parabola_vertex() {
        let (x, fx) = brent_min(|x| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-10, 200);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((fx - 1.0).abs() < 1e-14);
    }

    fn harmonic(t1: f64) -> DenseTrajectory {
        let sys = FnSystem::new(2, |_, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        });
        integrate(&OdeProblem::new(&sys), &[0.0, 1.0], 0.0, t1).unwrap()
    }

    #[test]
    fn first_zero_of_sine_is_pi() {
        let traj = harmonic(4.0);
        let t = first_zero(&traj, 0, 0.1).unwrap();
        assert!((t - std::f64::consts::PI).abs() < 1e-9);
        assert!(traj.eval_component(t, 0).unwrap().abs() < 1e-9);
    }

    #[test]
    fn positive_component_has_no_zero() {
        let sys = FnSystem::new(1, |_, _: &[f64], dy: &mut [f64]| dy[0] = 1.0);
        let traj = integrate(&OdeProblem::new(&sys), &[1.0], 0.0, 3.0).unwrap();
        assert!(first_zero(&traj, 0, 0.0).is_none());
    }

    #[test]
    fn tangential_touch_is_detected() {
        // y'' = 2 with y(0) = 1, y'(0) = -2 gives y = (t - 1)^2.
        let sys = FnSystem::new(2, |_, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = 2.0;
        });
        let traj = integrate(&OdeProblem::new(&sys), &[1.0, -2.0], 0.0, 3.0).unwrap();
        let t = first_zero(&traj, 0, 0.0).unwrap();
        assert!((t - 1.0).abs() < 1e-5, "t = {t}");
        // Independent check: the touch value is below the threshold.
        assert!(traj.eval_component(t, 0).unwrap().abs() < ZERO_TOL);
    }
}
