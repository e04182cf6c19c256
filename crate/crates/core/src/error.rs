use thiserror::Error;

/// Errors raised by the numerical kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("trigonometric polynomial is identically zero")]
    IdenticallyZero,
    #[error("cocycle matrix is identically zero (Lyapunov exponent is -inf)")]
    ZeroCocycle,
    #[error("operation requires a rational frequency")]
    NotRational,
    #[error("eps = {eps} lies within one grid step of the kink at {kink}")]
    AtKink { eps: f64, kink: f64 },
    #[error("backward iteration hit |det| < 1e-12 at step {step}")]
    SingularInverse { step: u64 },
    #[error("inadmissible coupling: {0}")]
    InadmissibleCoupling(String),
    #[error("duality map undefined for lambda2 = 0")]
    ZeroLambda2,
    #[error("every phase sample was skipped ({skipped} phases hit |c| < 1e-8)")]
    SingularGauge { skipped: usize },
    #[error("empty spectrum approximation")]
    EmptySet,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
