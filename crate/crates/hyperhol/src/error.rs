//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the spectral Hodge-theory toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperholError {
    /// The coefficients of an induced complex structure are not a unit vector.
    #[error("coefficients ({a}, {b}, {c}) do not form a unit triple (norm² = {norm_sq})")]
    NotUnitTriple { a: f64, b: f64, c: f64, norm_sq: f64 },

    /// A product or operator would produce frequencies beyond the working cutoff.
    #[error("bandwidth overflow: result needs bandwidth {needed} but the working cutoff is {cutoff}")]
    BandwidthOverflow { needed: i32, cutoff: i32 },

    /// Operands disagree in rank, degree or cutoff.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A derivation was applied to a 0-form.
    #[error("the derivation is only defined on forms of positive degree")]
    DegreeZero,

    /// An operator was applied outside of its Hodge-type domain.
    #[error("wrong Hodge type: {0}")]
    WrongType(String),

    /// An eigen-solve or materialization would exceed the configured budget.
    #[error("solver budget exceeded: dimension {dimension} exceeds {budget}")]
    SolverBudgetExceeded { dimension: usize, budget: usize },

    /// An iterative solver failed to reach its tolerance.
    #[error("solver diverged after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    /// A required hypothesis (integrability, hyperholomorphy, ...) fails.
    #[error("hypothesis violated for {check}: residual {residual:e}")]
    HypothesisViolated { check: String, residual: f64 },

    /// A form expected to be closed is not.
    #[error("form is not closed: residual {residual:e}")]
    NotClosed { residual: f64 },

    /// A form expected to be exact has a harmonic component.
    #[error("form is not exact: harmonic component has relative norm {residual:e}")]
    NotExact { residual: f64 },

    /// The constraint projection moved a curvature sample too far.
    #[error("constraint projection moved the input by a fraction {fraction} > {limit}")]
    ConstraintProjectionTooLarge { fraction: f64, limit: f64 },

    /// A deformation obstruction does not vanish.
    #[error("obstruction at order {order} is not exact: relative harmonic part {residual:e}")]
    ObstructionNonzero { order: usize, residual: f64 },

    /// The deformation series is not converging.
    #[error("series diverging: term norms increased for three consecutive orders (last order {order})")]
    SeriesDiverging { order: usize },

    /// The gradient flow could not find a decreasing step.
    #[error("step size underflow at step {step} (rate {rate:e})")]
    StepSizeUnderflow { step: usize, rate: f64 },

    /// An experiment configuration is malformed.
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    /// Malformed serialized data.
    #[error("serialization error: {0}")]
    Serialization(String),
}

/// Result alias for the crate.
pub type Result<T> = std::result::Result<T, HyperholError>;
