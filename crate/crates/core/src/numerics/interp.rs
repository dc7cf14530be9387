//! Piecewise cubic interpolation of samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_nodes(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter("interpolation needs at least two matching samples".into()));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("interpolation nodes must be strictly increasing".into()));
    }
    Ok(())
}

/// Cubic Hermite data shared by both interpolants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Hermite {
    x: Vec<f64>,
    y: Vec<f64>,
    dy: Vec<f64>,
}

impl Hermite {
    fn interval(&self, t: f64) -> usize {
        let n = self.x.len();
        self.x.partition_point(|&v| v <= t).saturating_sub(1).min(n - 2)
    }

    /// (value, first derivative, second derivative) at `t`; extrapolates
    /// with the end cubic outside the node range.
    fn eval3(&self, t: f64) -> (f64, f64, f64) {
        let i = self.interval(t);
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (y0, y1) = (self.y[i], self.y[i + 1]);
        let (m0, m1) = (self.dy[i] * h, self.dy[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let v = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
        let d = (6.0 * s2 - 6.0 * s) * y0 + (3.0 * s2 - 4.0 * s + 1.0) * m0 + (-6.0 * s2 + 6.0 * s) * y1 + (3.0 * s2 - 2.0 * s) * m1;
        let dd = (12.0 * s - 6.0) * y0 + (6.0 * s - 4.0) * m0 + (-12.0 * s + 6.0) * y1 + (6.0 * s - 2.0) * m1;
        (v, d / h, dd / (h * h))
    }
}

/// Monotone piecewise cubic (Fritsch–Carlson / PCHIP slopes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pchip {
    h: Hermite,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_nodes(&x, &y)?;
        let n = x.len();
        let del: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let hs: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = del[0];
            d[1] = del[0];
        } else {
            for k in 1..n - 1 {
                if del[k - 1] * del[k] > 0.0 {
                    let w1 = 2.0 * hs[k] + hs[k - 1];
                    let w2 = hs[k] + 2.0 * hs[k - 1];
                    d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
                }
            }
            d[0] = end_slope(hs[0], hs[1], del[0], del[1]);
            d[n - 1] = end_slope(hs[n - 2], hs[n - 3], del[n - 2], del[n - 3]);
        }
        Ok(Self { h: Hermite { x, y, dy: d } })
    }

    /// Replaces the estimated end slopes with known values.
    pub fn with_end_slopes(mut self, d0: Option<f64>, d1: Option<f64>) -> Self {
        let n = self.h.dy.len();
        if let Some(d) = d0 {
            self.h.dy[0] = d;
        }
        if let Some(d) = d1 {
            self.h.dy[n - 1] = d;
        }
        self
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.h.eval3(t).0
    }

    pub fn deriv(&self, t: f64) -> f64 {
        self.h.eval3(t).1
    }

    pub fn nodes(&self) -> (&[f64], &[f64]) {
        (&self.h.x, &self.h.y)
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

/// C² cubic spline with end slopes taken from one-sided four-point
/// differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicSpline {
    h: Hermite,
}

impl CubicSpline {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        check_nodes(&x, &y)?;
        let n = x.len();
        if n < 4 {
            return Err(Error::InvalidParameter("cubic spline needs at least four samples".into()));
        }
        let d0 = lagrange_slope(&x[..4], &y[..4], x[0]);
        let dn = lagrange_slope(&x[n - 4..], &y[n - 4..], x[n - 1]);
        // Tridiagonal system for the interior slopes of a clamped spline.
        let hs: Vec<f64> = (0..n - 1).map(|i| x[i + 1] - x[i]).collect();
        let mut dy = vec![0.0; n];
        dy[0] = d0;
        dy[n - 1] = dn;
        let m = n - 2;
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        let mut lower = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        for k in 0..m {
            let i = k + 1;
            let (hl, hr) = (hs[i - 1], hs[i]);
            lower[k] = hr;
            diag[k] = 2.0 * (hl + hr);
            upper[k] = hl;
            rhs[k] = 3.0 * (hr * (y[i] - y[i - 1]) / hl + hl * (y[i + 1] - y[i]) / hr);
        }
        rhs[0] -= lower[0] * d0;
        rhs[m - 1] -= upper[m - 1] * dn;
        // Thomas algorithm.
        for k in 1..m {
            let w = lower[k] / diag[k - 1];
            diag[k] -= w * upper[k - 1];
            rhs[k] -= w * rhs[k - 1];
        }
        dy[m] = rhs[m - 1] / diag[m - 1];
        for k in (0..m - 1).rev() {
            dy[k + 1] = (rhs[k] - upper[k] * dy[k + 2]) / diag[k];
        }
        Ok(Self { h: Hermite { x, y, dy } })
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.h.eval3(t).0
    }

    pub fn eval3(&self, t: f64) -> (f64, f64, f64) {
        self.h.eval3(t)
    }
}

fn lagrange_slope(x: &[f64], y: &[f64], t: f64) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for j in 0..n {
        // d/dt of the j-th Lagrange basis polynomial.
        let mut denom = 1.0;
        for m in 0..n {
            if m != j {
                denom *= x[j] - x[m];
            }
        }
        let mut num = 0.0;
        for k in 0..n {
            if k == j {
                continue;
            }
            let mut prod = 1.0;
            for m in 0..n {
                if m != j && m != k {
                    prod *= t - x[m];
                }
            }
            num += prod;
        }
        s += y[j] * num / denom;
    }
    s
}
