//! Parabolic p-Laplace diffusion in a moving thin band around a closed plane curve,
//! the limit system on the curve itself, and the tools that compare the two.
//!
//! Modules, bottom-up:
//! - [`geometry`]: frames, curvature, velocities and the reference map of the band.
//! - [`thin`]: the band problem, pulled back to a fixed periodic rectangle.
//! - [`surface`]: the limit problem on the curve with the pointwise normal-flux unknown.
//! - [`averaging`]: weighted thickness averages, data lifting, error norms.
//! - [`experiments`]: thickness ladders, exact-solution suites, the radial oracle.
//! - [`output`]: CSV/JSON writers for trajectories and reports.

// Index loops mirror the element formulas; negated comparisons also reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod averaging;
pub mod curve;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod expr;
pub mod geometry;
pub mod linalg;
pub mod output;
pub mod quadrature;
pub mod scenario;
pub mod surface;
pub mod thin;
pub mod time;

pub use error::{Error, Result};
pub use exec::Exec;
pub use scenario::{Scenario, ScenarioSpec};
