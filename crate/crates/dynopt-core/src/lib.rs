//! Finite-MDP solvers and a tabular reinforcement-learning laboratory.
//!
//! The crate is organized around an exactly validated [`mdp::FiniteMdp`] and
//! grows outward from it:
//!
//! - [`mdp`] — the model type, Bellman operators, value iteration, policy
//!   evaluation, and greedy improvement;
//! - [`lp`] — the linear-programming formulation of the value function with
//!   a bundled two-phase simplex solver;
//! - [`horizon`] — finite-horizon backward induction;
//! - [`classic`] — classic deterministic dynamic programs (partition
//!   products, coin change, edit distance);
//! - [`agg`] — state aggregation and its error guarantee;
//! - [`iter`] — stochastic iterative processes and step-size diagnostics;
//! - [`rl`] — Q-learning, SARSA, and linear-function-approximation learning
//!   against simulators;
//! - [`avg`] — average-reward analysis and policy-gradient methods;
//! - [`structure`] — executable checkers for structural properties of solved
//!   models;
//! - [`models`] — builders for the benchmark models.
//!
//! Everything is deterministic given explicit seeds; no global randomness.

pub mod agg;
pub mod avg;
pub mod classic;
pub mod error;
pub mod horizon;
pub mod iter;
pub mod linalg;
pub mod lp;
pub mod mdp;
pub mod models;
pub mod rl;
pub mod structure;

pub use error::{Error, Result};
