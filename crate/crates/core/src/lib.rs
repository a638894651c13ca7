//! Sign-changing bound states of the Schrodinger-Poisson system
//!
//! ```text
//! -Delta u + V(x) u + phi u = f(u),   -Delta phi = u^2   in R^3
//! ```
//!
//! computed on a truncated box by a descending flow built from the auxiliary
//! operator `A(u) = (-Delta + V + phi_u)^{-1} f(u)`, with the positive and
//! negative cone neighborhoods as invariant sets. Sign-changing critical points
//! are located by a minimax over a two-parameter simplex of fields; the slow
//! growth range `3 < p < 4` is reached by continuation in a perturbation
//! weight `lambda`.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! fix the scalar to `f64`, which is what the documented tolerances assume.

pub mod aop;
pub mod cones;
pub mod continuation;
pub mod coulomb;
pub mod error;
pub mod flow;
pub mod functional;
pub mod grid;
pub mod io;
pub mod minimax;
pub mod model;
pub mod problem;
pub mod scalar;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Bump, Field, Grid3};
pub use model::{CoulombMode, ModelConfig, PotentialKind};
pub use problem::Problem;
pub use scalar::Real;

pub type Grid64 = Grid3<f64>;
pub type Field64 = Field<f64>;
pub type Bump64 = Bump<f64>;
pub type ModelConfig64 = ModelConfig<f64>;
pub type Problem64 = Problem<f64>;
pub type CoulombSolver64 = coulomb::CoulombSolver<f64>;
pub type ConeGeometry64 = cones::ConeGeometry<f64>;
pub type FlowParams64 = flow::FlowParams<f64>;
pub type MinimaxParams64 = minimax::MinimaxParams<f64>;
pub type ContinuationSchedule64 = continuation::ContinuationSchedule<f64>;
