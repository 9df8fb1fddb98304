//! Numerical laboratory for Metropolis-Hastings kernels over
//! exponential-power targets.
//!
//! The crate provides:
//!
//! - density families and samplers for independence, random-walk and
//!   Langevin proposals ([`model`]);
//! - the associated transition kernel with acceptance-mass quadrature,
//!   chain simulation and empirical measures ([`kernel`]);
//! - drift-functional evaluation, tail-limit probes and analytic regime
//!   classification ([`lyapunov`]);
//! - the empirical-measure rate function on discretized chains, with an
//!   exact occupancy dynamic program ([`rate`]);
//! - total-variation decay and drift/minorization diagnostics
//!   ([`ergodicity`]).
//!
//! All numerics are generic over the floating-point type through
//! [`scalar::Scalar`]; the `*64` aliases below fix `f64`, which is what the
//! shipped tolerances assume.

// Dense small-matrix code reads better with explicit indices.
#![allow(clippy::needless_range_loop)]

pub mod config;
pub mod ergodicity;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod linalg;
pub mod lyapunov;
pub mod model;
pub mod numeric;
pub mod point;
pub mod rate;
pub mod report;
pub mod quad;
pub mod scalar;

pub use error::{Error, Result};
pub use point::Point;
pub use scalar::Scalar;

/// `f64` instantiations of the core types.
pub type Target64 = model::TargetSpec<f64>;
pub type Proposal64 = model::ProposalSpec<f64>;
pub type Kernel64 = kernel::MhKernel<f64>;
pub type GridSpec64 = grid::GridSpec<f64>;
pub type GridChain64 = rate::GridChain<f64>;
pub type Point64 = point::Point<f64>;
