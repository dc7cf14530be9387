//! Functions sampled on the uniform periodic grid θ_i = 2πi/n.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSamples {
    values: Vec<f64>,
}

impl PeriodicSamples {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        validate_grid_size(values.len())?;
        Ok(Self { values })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        validate_grid_size(n)?;
        Ok(Self { values: (0..n).map(|i| f(grid_angle(i, n))).collect() })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn theta(&self, i: usize) -> f64 {
        grid_angle(i, self.n())
    }

    pub fn step(&self) -> f64 {
        2.0 * PI / self.n() as f64
    }

    /// Value at a cyclic index.
    pub fn at(&self, i: isize) -> f64 {
        let n = self.n() as isize;
        self.values[i.rem_euclid(n) as usize]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { values: self.values.iter().map(|&x| f(x)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.n(), other.n());
        Self { values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect() }
    }
}

pub fn grid_angle(i: usize, n: usize) -> f64 {
    2.0 * PI * i as f64 / n as f64
}

pub fn validate_grid_size(n: usize) -> Result<()> {
    if n < 16 || !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("periodic grid size {n} must be even and >= 16")));
    }
    Ok(())
}

/// Trapezoidal rule (2π/n)·Σ values.
pub fn periodic_integral(samples: &PeriodicSamples) -> f64 {
    samples.step() * samples.values.iter().sum::<f64>()
}

/// Corner factor and floor for [`periodic_derivative`].
const CORNER_FACTOR: f64 = 10.0;
const CORNER_FLOOR: f64 = 1e-8;

/// Indices whose second difference marks them as corners.
pub fn corner_flags(samples: &PeriodicSamples) -> Vec<bool> {
    let n = samples.n() as isize;
    let d2: Vec<f64> = (0..n).map(|i| (samples.at(i + 1) - 2.0 * samples.at(i) + samples.at(i - 1)).abs()).collect();
    let mut sorted = d2.clone();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len();
    let median = 0.5 * (sorted[(m - 1) / 2] + sorted[m / 2]);
    let thresh = CORNER_FACTOR * median + CORNER_FLOOR;
    d2.iter().map(|&x| x > thresh).collect()
}

/// a.e. derivative of a Lipschitz periodic function from its samples.
///
/// Central differences, except near corners: a corner takes the one-sided
/// difference from its smooth side, and a smooth neighbour of a corner takes
/// the one-sided difference pointing away from it.
pub fn periodic_derivative(samples: &PeriodicSamples) -> PeriodicSamples {
    let n = samples.n() as isize;
    let h = samples.step();
    let flags = corner_flags(samples);
    let flag = |i: isize| flags[i.rem_euclid(n) as usize];
    let values = (0..n)
        .map(|i| {
            let back = (samples.at(i) - samples.at(i - 1)) / h;
            let fwd = (samples.at(i + 1) - samples.at(i)) / h;
            let central = 0.5 * (samples.at(i + 1) - samples.at(i - 1)) / h;
            let (left, right) = (flag(i - 1), flag(i + 1));
            if flag(i) {
                if !left {
                    back
                } else if !right {
                    fwd
                } else {
                    central
                }
            } else {
                match (left, right) {
                    (false, true) => back,
                    (true, false) => fwd,
                    _ => central,
                }
            }
        })
        .collect();
    PeriodicSamples { values }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd_grids() {
        assert!(PeriodicSamples::new(vec![0.0; 14]).is_err());
        assert!(PeriodicSamples::new(vec![0.0; 17]).is_err());
        assert!(PeriodicSamples::new(vec![0.0; 16]).is_ok());
    }

    #[test]
    fn integral_of_constant_and_cos_squared() {
        for n in [16, 64, 130] {
            let s = PeriodicSamples::from_fn(n, |_| 1.0).unwrap();
            assert!((periodic_integral(&s) - 2.0 * PI).abs() < 1e-12);
        }
        let s = PeriodicSamples::from_fn(64, |t| t.cos().powi(2)).unwrap();
        assert!((periodic_integral(&s) - PI).abs() < 1e-12);
    }

    #[test]
    fn integral_of_abs_sine_converges_at_second_order() {
        let est = |n| periodic_integral(&PeriodicSamples::from_fn(n, |t: f64| t.sin().abs()).unwrap());
        let (e1, e2) = ((est(256) - 4.0).abs(), (est(512) - 4.0).abs());
        assert!(e1 < 1e-3);
        // Richardson on the two grids recovers the value much more tightly.
        let extrap = (4.0 * est(512) - est(256)) / 3.0;
        assert!((extrap - 4.0).abs() < e2);
    }

    #[test]
    fn derivative_of_constant_and_sine() {
        let c = PeriodicSamples::from_fn(32, |_| 2.5).unwrap();
        assert!(periodic_derivative(&c).values().iter().all(|&x| x == 0.0));
        let n = 128;
        let s = PeriodicSamples::from_fn(n, f64::sin).unwrap();
        let d = periodic_derivative(&s);
        let h = 2.0 * PI / n as f64;
        for i in 0..n {
            assert!((d.values()[i] - d.theta(i).cos()).abs() < h * h);
        }
    }

    #[test]
    fn derivative_of_triangle_wave_is_piecewise_constant() {
        // Triangle wave with corners at θ = 0 and θ = π (grid nodes), slope ±1.
        let n = 64;
        let tri = |t: f64| if t <= PI { t } else { 2.0 * PI - t };
        let s = PeriodicSamples::from_fn(n, tri).unwrap();
        let d = periodic_derivative(&s);
        for i in 0..n {
            let expect = if i == 0 {
                -1.0 // backward difference from the smooth left side
            } else if i <= n / 2 {
                // i = n/2 is the corner at π; one-sided from the left
                1.0
            } else {
                -1.0
            };
            assert!((d.values()[i] - expect).abs() < 1e-12, "i = {i}: {}", d.values()[i]);
        }
    }
}
