//! Chebyshev expansions on an interval.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chebyshev {
    a: f64,
    b: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    /// Interpolates `f` at `n` Chebyshev points of the first kind.
    pub fn fit(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> Self {
        assert!(n >= 1 && b > a);
        let (bma, bpa) = (0.5 * (b - a), 0.5 * (b + a));
        let fx: Vec<f64> = (0..n).map(|k| f(bpa + bma * (PI * (k as f64 + 0.5) / n as f64).cos())).collect();
        let coeffs = (0..n)
            .map(|j| {
                let s: f64 = fx.iter().enumerate().map(|(k, &y)| y * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos()).sum();
                let c = 2.0 * s / n as f64;
                if j == 0 {
                    0.5 * c
                } else {
                    c
                }
            })
            .collect();
        Self { a, b, coeffs }
    }

    /// Doubles the degree until the trailing coefficients fall below
    /// `tol · max|c|`, then truncates.
    pub fn fit_adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, max_n: usize) -> Result<Self> {
        let mut n = 16;
        loop {
            let mut c = Self::fit(&f, a, b, n);
            let scale = c.coeffs.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
            let tail = c.coeffs[n - n / 8..].iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if tail <= tol * scale {
                let keep = c.coeffs.iter().rposition(|x| x.abs() > 0.1 * tol * scale).map_or(1, |i| i + 1);
                c.coeffs.truncate(keep.max(2));
                return Ok(c);
            }
            if n >= max_n {
                return Err(Error::InvalidParameter(format!("Chebyshev fit on [{a}, {b}] did not resolve to {tol} with {max_n} terms")));
            }
            n = (2 * n).min(max_n);
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Clenshaw evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let y = (2.0 * x - self.a - self.b) / (self.b - self.a);
        let y2 = 2.0 * y;
        let (mut d, mut dd) = (0.0, 0.0);
        for &c in self.coeffs[1..].iter().rev() {
            let sv = d;
            d = y2 * d - dd + c;
            dd = sv;
        }
        y * d - dd + self.coeffs[0]
    }

    pub fn derivative(&self) -> Self {
        let n = self.coeffs.len();
        if n < 2 {
            return Self { a: self.a, b: self.b, coeffs: vec![0.0] };
        }
        let mut d = vec![0.0; n];
        d[n - 2] = 2.0 * (n - 1) as f64 * self.coeffs[n - 1];
        for j in (0..n.saturating_sub(2)).rev() {
            d[j] = d[j + 2] + 2.0 * (j + 1) as f64 * self.coeffs[j + 1];
        }
        d[0] *= 0.5;
        d.truncate(n - 1);
        let scale = 2.0 / (self.b - self.a);
        for x in &mut d {
            *x *= scale;
        }
        Self { a: self.a, b: self.b, coeffs: d }
    }

    /// Antiderivative vanishing at the left end of the interval.
    pub fn antiderivative(&self) -> Self {
        let n = self.coeffs.len();
        let c = &self.coeffs;
        let get = |j: usize| if j < n { c[j] } else { 0.0 };
        let scale = 0.5 * (self.b - self.a);
        let mut out = vec![0.0; n + 1];
        for j in 1..=n {
            let cm = if j == 1 { 2.0 * get(0) } else { get(j - 1) };
            out[j] = scale * (cm - get(j + 1)) / (2.0 * j as f64);
        }
        let mut tmp = Self { a: self.a, b: self.b, coeffs: out };
        let v0 = tmp.eval(self.a);
        tmp.coeffs[0] -= v0;
        tmp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_eval_derivative_antiderivative() {
        let c = Chebyshev::fit_adaptive(|x: f64| (2.0 * x).sin() + x * x, -1.0, 2.0, 1e-15, 256).unwrap();
        let d = c.derivative();
        let i = c.antiderivative();
        for k in 0..20 {
            let x = -1.0 + 3.0 * k as f64 / 19.0;
            assert!((c.eval(x) - ((2.0 * x).sin() + x * x)).abs() < 1e-13);
            assert!((d.eval(x) - (2.0 * (2.0 * x).cos() + 2.0 * x)).abs() < 1e-11);
            let prim = |t: f64| -0.5 * (2.0 * t).cos() + t.powi(3) / 3.0;
            assert!((i.eval(x) - (prim(x) - prim(-1.0))).abs() < 1e-13);
        }
    }
}
