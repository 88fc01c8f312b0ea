//! Geometry and flow machinery for CAT(0) (Hadamard) spaces.
//!
//! The crate provides four concrete space backends (Euclidean, hyperboloid-model
//! hyperbolic, spider tree, product) together with the operator theory that makes
//! sense on any of them: nonexpansive maps, their resolvents, proximal point
//! iterations, exponential-formula semigroups, and convex-functional gradient
//! flows. On top of that sits a finite-state Markov layer with the nonlinear
//! Markov operator, whose fixed points are harmonic maps, and discrete- and
//! continuous-time heat flows that solve L2-Dirichlet problems into singular
//! targets.
//!
//! All numerics are generic over the floating-point scalar via [`Scalar`];
//! `f64` aliases for the main types live at the crate root.

pub mod energy;
pub mod error;
pub mod flows;
pub mod linalg;
pub mod markov;
pub mod operators;
pub mod scalar;
pub mod space;

pub use error::{ConvergenceFailure, Error};
pub use scalar::Scalar;
pub use space::{HadamardPoint, Point, SpaceDescriptor};

/// Crate-wide result type; the error carries the scalar so convergence
/// diagnostics keep their precision.
pub type Result<T, S> = std::result::Result<T, Error<S>>;

pub type Point64 = space::Point<f64>;
pub type ConvexSet64 = space::ConvexSet<f64>;
pub type WeightedPointSet64 = space::WeightedPointSet<f64>;
pub type Map64 = operators::NonexpansiveMap<f64>;
pub type Kernel64 = markov::MarkovKernel<f64>;
pub type Field64 = markov::MapField<f64>;
pub type Trajectory64 = flows::Trajectory<f64, Point64>;
pub type FieldTrajectory64 = flows::Trajectory<f64, Field64>;
