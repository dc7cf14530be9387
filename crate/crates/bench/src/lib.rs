//! Fixtures shared by the benchmarks.

use isodiam::surface::{ellipsoid, ellipsoid_umbilics, BasePoint, ParametricSurface};

pub fn triaxial() -> ParametricSurface {
    ellipsoid(1.0, 0.8, 0.6).expect("valid semi-axes")
}

/// End of the major axis of the (1, 0.8, 0.6) ellipsoid.
pub fn major_axis_point(s: &ParametricSurface) -> BasePoint {
    BasePoint::at_point(s, [1.0, 0.0, 0.0]).expect("point on the surface")
}

pub fn umbilic_point(s: &ParametricSurface) -> BasePoint {
    let u = ellipsoid_umbilics(1.0, 0.8, 0.6).into_iter().find(|p| p[0] > 0.0 && p[2] > 0.0).expect("umbilic");
    BasePoint::at_point(s, u).expect("point on the surface")
}
