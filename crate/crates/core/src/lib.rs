//! Exact penalty functions and augmented Lagrangians for constrained
//! optimization, with a numerical harness that probes their exactness.
//!
//! The kernels are generic over [`Real`] (`f32` or `f64`); the solver and
//! reporting layer in [`exactlab`] runs in `f64`. Aliases for the common
//! double-precision types are exported at the crate root.

// Negated comparisons are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod auglag;
pub mod cones;
pub mod error;
pub mod exactlab;
pub mod numerics;
pub mod penalties;
pub mod problem;
pub mod sampling;
pub mod scalar;
pub mod separating;
pub mod smoothpen;

pub use error::{Error, Result};
pub use scalar::Real;
pub use separating::SeparatingFunction;

pub type SymMat64 = numerics::SymMat<f64>;
pub type SymMat32 = numerics::SymMat<f32>;
pub type Problem = problem::ConstrainedProblem<f64>;
pub type Problem32 = problem::ConstrainedProblem<f32>;
pub type Multipliers64 = problem::Multipliers<f64>;
pub type LorentzVec64 = cones::LorentzVec<f64>;
pub type MultiplierEstimate64 = smoothpen::MultiplierEstimate<f64>;
