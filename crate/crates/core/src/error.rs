use core::fmt;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoreError {
    /// A model parameter violates its invariant (named field).
    InvalidParams { field: &'static str },
    /// An operation argument is out of its documented domain.
    InvalidArgument { what: &'static str },
    /// The equilibrium solver exhausted its iteration budget, or the two
    /// solver branches disagree. Signals parameters with no well-conditioned
    /// positive interior equilibrium.
    NoConvergence,
    /// An integrator or envelope evaluation left the finite f64 range at the
    /// given step index.
    Overflow { step: usize },
    /// Path coarsening asked for a factor that does not divide the step count.
    NonDivisible { n_steps: usize, factor: usize },
    /// Trajectory and envelope grids differ.
    GridMismatch,
    /// A statistic that needs positive samples met a non-positive one.
    NonPositiveSample { index: usize },
    /// Too few replicates for the requested quantile resolution.
    TooFewReplicates { needed: usize, got: usize },
    /// More than 10% of replicates failed; the ensemble is not trustworthy.
    EnsembleFailure { failed: usize, total: usize },
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidParams { field } => {
                write!(f, "invalid model parameter: {field}")
            }
            CoreError::InvalidArgument { what } => write!(f, "invalid argument: {what}"),
            CoreError::NoConvergence => {
                write!(f, "equilibrium solver did not converge")
            }
            CoreError::Overflow { step } => {
                write!(f, "numerical overflow at step {step}")
            }
            CoreError::NonDivisible { n_steps, factor } => {
                write!(f, "coarsening factor {factor} does not divide {n_steps} steps")
            }
            CoreError::GridMismatch => write!(f, "trajectory and envelope grids differ"),
            CoreError::NonPositiveSample { index } => {
                write!(f, "non-positive sample at index {index}")
            }
            CoreError::TooFewReplicates { needed, got } => {
                write!(f, "needs at least {needed} replicates, got {got}")
            }
            CoreError::EnsembleFailure { failed, total } => {
                write!(f, "{failed} of {total} replicates failed (more than 10%)")
            }
        }
    }
}

impl core::error::Error for CoreError {}
