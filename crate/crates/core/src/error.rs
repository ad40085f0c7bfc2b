use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid sample count {count}: analysis needs an odd number of samples per component")]
    EvenSampleCount { count: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("segment evaluated at offset {offset} outside its support [-{horizon}, 0]")]
    Domain { offset: f64, horizon: f64 },

    #[error("right-hand side failed at collocation time t = {t}: {message}")]
    DomainAt { t: f64, message: String },

    #[error("problem `{0}` supplies no derivative and the finite-difference fallback is disabled")]
    NoDerivative(String),

    #[error("unknown problem `{name}`; available problems: {available}")]
    UnknownProblem { name: String, available: String },

    #[error(
        "fixed-point iteration failed to converge after {iterations} iterations \
         (last update {last_update:.3e}, contraction estimate {contraction:.3}); \
         try a larger harmonic count N"
    )]
    Contraction {
        iterations: usize,
        last_update: f64,
        contraction: f64,
    },

    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:.3e})")]
    NewtonMaxIter { iterations: usize, residual: f64 },

    #[error("singular linear system in Newton step (condition estimate {condition:.3e})")]
    Singular { condition: f64 },

    #[error("damped Newton step failed to decrease the residual {residual:.3e} after 20 halvings")]
    Damping { residual: f64 },

    #[error(
        "augmented system is not square ({equations} equations, {unknowns} unknowns); \
         continuation near a Hopf point needs the parameter free"
    )]
    NotSquare { equations: usize, unknowns: usize },

    #[error("root search did not converge from {start} (|det K| = {residual:.3e})")]
    RootNotConverged { start: String, residual: f64 },

    #[error("matrix has no numerical null vector (smallest/largest singular value = {ratio:.3e})")]
    NoNullVector { ratio: f64 },

    #[error("delay bound violated at t = {t}: {message}")]
    DelayViolation { t: f64, message: String },

    #[error("step size {dt} is not usable for horizon {horizon}")]
    StepUnderflow { dt: f64, horizon: f64 },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
