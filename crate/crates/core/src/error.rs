use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An orbit left the declared state space.
    #[error("orbit left the state space at iterate {index}")]
    DomainEscape { index: usize },

    /// An iterative procedure hit its iteration cap.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NonConverged { iterations: usize, residual: f64 },

    #[error("no real two-cycle for alpha = {alpha} (requires alpha > 3/4)")]
    NoRealCycle { alpha: f64 },

    /// A structural precondition on the input system does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),

    /// An internal consistency check failed.
    #[error("internal consistency check failed: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
