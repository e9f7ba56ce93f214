use alloc::string::String;
use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter { name: &'static str, value: f64, reason: &'static str },

    #[error("precondition violated: {0}")]
    PreconditionViolation(String),

    /// Relaxation did not settle: the system is unstable or self-pulsing.
    #[error("steady state not reached by t = {t_max}: derivative norm {residual:e}")]
    NonConvergence { t_max: f64, residual: f64 },

    #[error("amplitudes diverged (|x| = {magnitude:e} at t = {t})")]
    Unstable { t: f64, magnitude: f64 },

    #[error("eigenvalue solver did not converge")]
    EigenSolveFailure,

    #[error("A + i*omega is numerically singular at omega = {omega} (condition number {condition:e})")]
    SingularSystem { omega: f64, condition: f64 },

    #[error("conditioning variance {variance:e} too small for linear inference")]
    DegenerateConditioner { variance: f64 },

    /// More than 1% of the positive-P trajectories left the |x| < 1e6 region.
    #[error(
        "{diverged} of {total} trajectories diverged; positive-P sampling is unreliable here \
         (boundary terms likely)"
    )]
    TrajectoryDivergence { diverged: usize, total: usize },

    #[error("insufficient data for a spectral estimate: {windows} windows, at least {required} needed")]
    InsufficientData { windows: usize, required: usize },

    #[error("invalid stochastic configuration: {0}")]
    InvalidConfig(String),
}
