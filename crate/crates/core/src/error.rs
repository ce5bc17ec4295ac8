use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("initial samples have length {got}, grid has {expected} nodes")]
    SamplesLengthMismatch { expected: usize, got: usize },

    #[error("ramp width {0} outside (0, 0.5]")]
    InvalidRamp(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("tridiagonal solve failed{}: {detail}", step.map(|s| format!(" at step {s}")).unwrap_or_default())]
    SingularOrIllConditioned { step: Option<usize>, detail: String },

    #[error("amplification factor denominator {0:e} is numerically zero")]
    DivisionNearZero(f64),

    #[error("trajectories are not comparable: {0}")]
    GridMismatch(String),

    #[error("need at least {needed} samples in the window, found {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("bracket [{lo}, {hi}] does not separate formed from not formed")]
    BracketInvalid { lo: f64, hi: f64 },

    #[error("need at least {needed} present velocity rows, found {got}")]
    TooFewRows { needed: usize, got: usize },
}

impl Error {
    /// Attach a step index to a solver failure.
    pub(crate) fn at_step(self, step: usize) -> Self {
        match self {
            Error::SingularOrIllConditioned { detail, .. } => Error::SingularOrIllConditioned {
                step: Some(step),
                detail,
            },
            other => other,
        }
    }
}
