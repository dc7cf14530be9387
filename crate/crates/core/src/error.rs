use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("chart evaluated at a declared singularity (u = {u}, v = {v})")]
    SingularChart { u: f64, v: f64 },

    #[error("integration failed at t = {last_t}: {reason}")]
    Integration { last_t: f64, reason: String },

    #[error("quadrature did not converge (estimate {estimate}, error {error})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("geodesic shooting failed for theta = {theta} at t = {last_t}: {reason}")]
    Shooting { theta: f64, last_t: f64, reason: String },

    #[error("{what} = {value} outside trajectory range [{lo}, {hi}]")]
    OutOfRange { what: &'static str, value: f64, lo: f64, hi: f64 },

    #[error("distance oracle found no convergent start")]
    DistanceOracle,

    #[error("cut profile failed at theta = {theta}: {reason}")]
    Profile { theta: f64, reason: String },

    #[error("no cut point or conjugate point found before t = {t_max} along theta = {theta}; surface not closed or t_max too small")]
    SurfaceNotClosed { theta: f64, t_max: f64 },

    #[error("symmetrization failed: {0}")]
    Build(String),

    #[error("consistency check `{what}` failed: {value} vs {expected}")]
    Consistency { what: String, value: f64, expected: f64 },

    #[error("profile is not embeddable: max |f'| = {max_slope}")]
    Embeddability { max_slope: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
