//! Intrinsic geometry of closed convex surfaces and the isodiametric bound chain.

pub mod cutlocus;
pub mod error;
pub mod geodesic;
pub mod global;
pub mod highdim;
pub mod numerics;
pub mod surface;
pub mod symmetrize;

pub use error::{Error, Result};
