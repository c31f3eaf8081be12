//! Exact planar geometry for intrinsic metrics in obstacle-punctured domains.
//!
//! The crate builds finite-stage approximations of several fractal obstacle
//! families, computes Euclidean shortest paths around them (exactly via a
//! visibility graph, approximately via an any-angle grid search, and
//! constructively via a perimeter-detour procedure), probes interval- and
//! Lipschitz-thinness, and estimates delta-monotonicity of sampled planar
//! maps. Combinatorial decisions run on exact rational arithmetic; metric
//! quantities are reported as `f64`.

pub mod acceptance;
pub mod error;
pub mod fractal;
pub mod geometry;
pub mod io;
pub mod monotone;
pub mod path;
pub mod rat;
pub mod report;
pub mod thinness;

pub use error::{Error, Result};
