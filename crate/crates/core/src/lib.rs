//! Horizontal calculus on Carnot groups, Pucci extremal operators,
//! convexity along vector fields, and numerical estimate harnesses on the
//! Heisenberg group.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod convexity;
pub mod error;
pub mod estimates;
pub mod group;
pub mod pucci;
pub mod report;
pub mod rng;

pub use calculus::{FdOrder, FdScheme, RadialProfile, ScalarField};
pub use convexity::{PointSampler, SemiconvexityReport};
pub use estimates::{CounterexampleConfig, Estimate, GlueMode, QuadratureSpec, SweepReport};
pub use error::{Error, Result};
pub use group::{GroupDescriptor, Point};
pub use pucci::{Ellipticity, Spectrum, SubellipticOperator, SymMatrix};
pub use report::{Report, Verdict};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
