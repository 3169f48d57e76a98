//! Error types shared across the library.

use thiserror::Error;

/// Errors produced by model construction, solvers, and learning routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A model invariant was violated at construction or load time.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A vector or table had the wrong length for the model it was used with.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A policy prescribed an action outside the feasible set Γ(s).
    #[error("infeasible action {action} at state {state}")]
    InfeasibleAction { state: usize, action: usize },

    /// A discounted solver was invoked with β ≥ 1.
    #[error("discount factor {0} is not < 1; use the finite-horizon or average-reward routines")]
    DiscountNotLessThanOne(f64),

    /// An invalid numeric parameter (tolerance, step size, probability, ...).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An iterate left the finite range (divergence guard).
    #[error("non-finite iterate: {0}")]
    NonFinite(String),

    /// The induced Markov chain is not irreducible and aperiodic.
    #[error("policy is not ergodic: {0}")]
    NotErgodic(String),

    /// A linear program was detected to be infeasible.
    #[error("linear program is infeasible")]
    LpInfeasible,

    /// A linear program was detected to be unbounded.
    #[error("linear program is unbounded")]
    LpUnbounded,

    /// A linear system could not be solved reliably (pivot breakdown).
    #[error("linear solve failed: {0}")]
    SingularSystem(String),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
