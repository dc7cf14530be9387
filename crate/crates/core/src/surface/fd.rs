use std::fmt;
use std::sync::Arc;

use super::{cross, norm, sub, Chart, ChartDomain, Jet, Vec3};

type PositionMap = Arc<dyn Fn(f64, f64) -> Vec3 + Send + Sync>;

/// Chart from a position map alone; derivatives by 4th-order central
/// differences.
pub struct FdChart {
    position: PositionMap,
    domain: ChartDomain,
    h1: (f64, f64),
    h2: (f64, f64),
}

impl fmt::Debug for FdChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FdChart").field("domain", &self.domain).finish()
    }
}

fn d1(f: impl Fn(f64) -> Vec3, x: f64, h: f64) -> Vec3 {
    let (a, b, c, d) = (f(x + 2.0 * h), f(x + h), f(x - h), f(x - 2.0 * h));
    std::array::from_fn(|k| (-a[k] + 8.0 * b[k] - 8.0 * c[k] + d[k]) / (12.0 * h))
}

fn d2(f: impl Fn(f64) -> Vec3, x: f64, h: f64) -> Vec3 {
    let (a, b, m, c, d) = (f(x + 2.0 * h), f(x + h), f(x), f(x - h), f(x - 2.0 * h));
    std::array::from_fn(|k| (-a[k] + 16.0 * b[k] - 30.0 * m[k] + 16.0 * c[k] - d[k]) / (12.0 * h * h))
}

impl FdChart {
    pub fn new(position: PositionMap, domain: ChartDomain) -> Self {
        let ru = domain.u.1 - domain.u.0;
        let rv = domain.v.1 - domain.v.0;
        // Second derivatives need a larger step than first derivatives to
        // keep roundoff (eps / h²) below the truncation error.
        Self { position, domain, h1: (1e-5 * ru, 1e-5 * rv), h2: (1e-3 * ru, 1e-3 * rv) }
    }

    pub fn extrinsic_diameter_estimate(&self) -> f64 {
        let n = 40;
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for i in 0..=n {
            for j in 0..=n {
                let u = self.domain.u.0 + (self.domain.u.1 - self.domain.u.0) * i as f64 / n as f64;
                let v = self.domain.v.0 + (self.domain.v.1 - self.domain.v.0) * j as f64 / n as f64;
                let p = (self.position)(u, v);
                for k in 0..3 {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
        }
        1.1 * norm(sub(hi, lo))
    }
}

impl Chart for FdChart {
    fn domain(&self) -> ChartDomain {
        self.domain
    }

    fn jet(&self, u: f64, v: f64) -> Jet {
        let p = &self.position;
        let (hu, hv) = self.h1;
        let (ku, kv) = self.h2;
        let xuv = {
            let mixed = |h: f64, k: f64| -> Vec3 {
                let (a, b, c, d) = (p(u + h, v + k), p(u + h, v - k), p(u - h, v + k), p(u - h, v - k));
                std::array::from_fn(|i| (a[i] - b[i] - c[i] + d[i]) / (4.0 * h * k))
            };
            let (m1, m2) = (mixed(ku, kv), mixed(2.0 * ku, 2.0 * kv));
            std::array::from_fn(|i| (4.0 * m1[i] - m2[i]) / 3.0)
        };
        Jet { x: p(u, v), xu: d1(|s| p(s, v), u, hu), xv: d1(|s| p(u, s), v, hv), xuu: d2(|s| p(s, v), u, ku), xuv, xvv: d2(|s| p(u, s), v, kv) }
    }

    fn quality(&self, u: f64, v: f64) -> f64 {
        let d = self.domain;
        let edge = |x: f64, (lo, hi): (f64, f64), periodic: bool| {
            if periodic {
                1.0
            } else {
                ((x - lo).min(hi - x) / (0.05 * (hi - lo))).clamp(0.0, 1.0)
            }
        };
        let q = edge(u, d.u, d.u_periodic).min(edge(v, d.v, d.v_periodic));
        if q <= 0.0 {
            return 0.0;
        }
        let j = self.jet(u, v);
        let area = norm(cross(j.xu, j.xv));
        let scale = norm(j.xu) * norm(j.xv);
        if scale == 0.0 {
            0.0
        } else {
            q.min(area / scale)
        }
    }

    fn invert(&self, _p: Vec3) -> Option<(f64, f64)> {
        None
    }

    fn orientation(&self) -> f64 {
        1.0
    }
}
