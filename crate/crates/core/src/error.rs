//! Error type shared across the crate.

use thiserror::Error;

/// Everything that can go wrong in model construction, analysis, integration,
/// experiments, or fitting.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A parameter or argument violates its domain constraints.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// Closed-form equilibrium/stability machinery only covers unit exponents.
    #[error("unsupported exponents l={l}, m={m}: closed forms require l = m = 1")]
    UnsupportedExponents { l: f64, m: f64 },

    /// The interior-equilibrium existence condition fails.
    #[error("no interior equilibrium: existence inequality does not hold")]
    NoInteriorEquilibrium,

    /// A structural assumption on the parameters does not hold.
    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    /// No positive Lyapunov coefficient pair exists for these parameters.
    #[error("empty feasible interval for Lyapunov coefficients")]
    EmptyFeasibleInterval,

    /// A theorem hypothesis required by the requested experiment fails.
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    /// Adaptive step size fell below the resolvable scale.
    #[error("step underflow at t = {t}: h = {h}")]
    StepUnderflow { t: f64, h: f64 },

    /// The integrator ran out of its step budget.
    #[error("step budget exhausted after {steps} steps at t = {t}")]
    BudgetExhausted { steps: u64, t: f64 },

    /// The vector field returned NaN or infinity.
    #[error("non-finite derivative at t = {t}")]
    NonFiniteDerivative { t: f64 },

    /// No periodic orbit was found in the observation window.
    #[error("no limit cycle detected: {0}")]
    NoCycleDetected(String),

    /// A dataset file failed to parse.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
