use std::f64::consts::PI;

use super::{Chart, ChartDomain, Jet, Vec3};

/// Angular chart (A sin u cos v, B sin u sin v, C cos u) written into the
/// world axes `perm`; the poles sit on world axis `perm[2]`.
#[derive(Debug, Clone)]
pub struct EllipsoidChart {
    semi: [f64; 3],
    perm: [usize; 3],
}

impl EllipsoidChart {
    /// Poles on the z-axis.
    pub fn z_poles(a: f64, b: f64, c: f64) -> Self {
        Self { semi: [a, b, c], perm: [0, 1, 2] }
    }

    /// Poles on the x-axis: (a cos u, b sin u cos v, c sin u sin v). A cyclic
    /// permutation of the axes, so the orientation is preserved.
    pub fn x_poles(a: f64, b: f64, c: f64) -> Self {
        Self { semi: [b, c, a], perm: [1, 2, 0] }
    }

    fn place(&self, w: [f64; 3]) -> Vec3 {
        let mut out = [0.0; 3];
        for k in 0..3 {
            out[self.perm[k]] = self.semi[k] * w[k];
        }
        out
    }
}

impl Chart for EllipsoidChart {
    fn domain(&self) -> ChartDomain {
        ChartDomain { u: (0.0, PI), v: (0.0, 2.0 * PI), u_periodic: false, v_periodic: true }
    }

    fn jet(&self, u: f64, v: f64) -> Jet {
        let (su, cu) = u.sin_cos();
        let (sv, cv) = v.sin_cos();
        Jet {
            x: self.place([su * cv, su * sv, cu]),
            xu: self.place([cu * cv, cu * sv, -su]),
            xv: self.place([-su * sv, su * cv, 0.0]),
            xuu: self.place([-su * cv, -su * sv, -cu]),
            xuv: self.place([-cu * sv, cu * cv, 0.0]),
            xvv: self.place([-su * cv, -su * sv, 0.0]),
        }
    }

    fn quality(&self, u: f64, _v: f64) -> f64 {
        u.sin().abs()
    }

    fn invert(&self, p: Vec3) -> Option<(f64, f64)> {
        let w: Vec<f64> = (0..3).map(|k| p[self.perm[k]] / self.semi[k]).collect();
        let u = w[0].hypot(w[1]).atan2(w[2]);
        let v = w[1].atan2(w[0]).rem_euclid(2.0 * PI);
        Some((u, v))
    }

    fn orientation(&self) -> f64 {
        1.0
    }
}
