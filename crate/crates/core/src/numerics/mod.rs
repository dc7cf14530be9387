//! Numerical kernels shared by the geometry modules.

pub mod chebyshev;
pub mod interp;
pub mod ode;
pub mod periodic;
pub mod quadrature;
pub mod roots;

pub use chebyshev::Chebyshev;
pub use interp::{CubicSpline, Pchip};
pub use ode::{
    integrate, integrate_until, DenseTrajectory, FnSystem, IntegrationFailure, OdeProblem, OdeSystem, RhsError, StepControl, Termination, Tolerances,
};
pub use periodic::{corner_flags, grid_angle, periodic_derivative, periodic_integral, validate_grid_size, PeriodicSamples};
pub use quadrature::{adaptive_quadrature, cumulative_integral, simpson};
pub use roots::{brent_min, brent_root, first_zero};
