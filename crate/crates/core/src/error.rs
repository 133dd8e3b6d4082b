use thiserror::Error;

use crate::ode::TerminationStatus;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("{what}: got {value}")]
    Domain { what: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{model} has no closed form for {quantity}")]
    Unsupported {
        model: &'static str,
        quantity: &'static str,
    },

    #[error("trajectory failed: {0}")]
    Trajectory(TerminationStatus),

    #[error("cone-angle parameter beta = {0} is not above the threshold 1/4 (alpha^2 must exceed 1/4)")]
    BelowThreshold(f64),

    #[error("beta = {target} is not enclosed by tau in [{tau_lo}, {tau_hi}] (beta ranges over [{beta_hi_tau}, {beta_lo_tau}])")]
    NoBracket {
        target: f64,
        tau_lo: f64,
        tau_hi: f64,
        beta_lo_tau: f64,
        beta_hi_tau: f64,
    },

    #[error("bisection did not reach |beta - target| < {tol} after {iterations} iterations")]
    NoConvergence { tol: f64, iterations: usize },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64) -> Self {
        Error::Domain { what, value }
    }
}
