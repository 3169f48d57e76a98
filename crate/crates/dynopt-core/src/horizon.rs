//! Finite-horizon backward induction:
//! `V_t(s) = max_{a ∈ Γ(s)} r(s,a) + Σ_{s'} p(s,a,s') V_{t+1}(s')`
//! with `V_{T+1} ≡ 0` and no discounting (β = 1 internally, regardless of the
//! model's stored discount). Requires bounded rewards, which finite models
//! guarantee by construction.

use crate::error::Result;
use crate::mdp::{FiniteMdp, ValueVector};

/// Per-period value vectors; `values[t]` is `V_{t+1}` for t in 0..=T, i.e.
/// `values[0]` is the first-period value `V_1` and `values[T]` is the
/// terminal `V_{T+1} ≡ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonValues {
    pub values: Vec<ValueVector>,
}

impl HorizonValues {
    /// The first-period value function V_1.
    pub fn first(&self) -> &ValueVector {
        &self.values[0]
    }
}

/// Runs undiscounted backward induction for `horizon` periods.
pub fn backward_induction(mdp: &FiniteMdp, horizon: usize) -> Result<HorizonValues> {
    assert!(horizon >= 1, "horizon must be at least 1");
    let n = mdp.n_states();
    let mut values = vec![vec![0.0; n]]; // V_{T+1} = 0
    let mut next = vec![0.0; n];
    for _ in 0..horizon {
        let mut current = Vec::with_capacity(n);
        for s in 0..n {
            let mut best = f64::NEG_INFINITY;
            for &a in mdp.feasible(s) {
                let mut v = mdp.expected_reward(s, a)?;
                for t in mdp.arcs(s, a)? {
                    v += t.prob * next[t.next];
                }
                best = best.max(v);
            }
            current.push(best);
        }
        values.push(current.clone());
        next = current;
    }
    values.reverse();
    Ok(HorizonValues { values })
}
