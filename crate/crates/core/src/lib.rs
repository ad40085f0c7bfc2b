//! Periodic orbits of functional differential equations by reduction to a
//! finite algebraic system on Fourier coefficients.

pub mod charmatrix;
pub mod continuation;
pub mod error;
pub mod fourier;
pub mod functional;
pub mod integrate;
pub mod linalg;
pub mod reduction;

pub use error::{Error, Result};
pub use fourier::{CoeffVec, PeriodicFn, Projection};
pub use functional::{builtin, extend_autonomous, ExtendedProblem, ProblemDef, Segment};
pub use reduction::SolverConfig;
