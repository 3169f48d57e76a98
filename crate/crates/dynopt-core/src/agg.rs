//! State aggregation: the aggregate Bellman operator W on a hard partition
//! of the state space, its fixed point, and the ε/(1−β) error guarantee.
//!
//! With membership sets N(x), disaggregation weights d summing to one inside
//! each group, and indicator membership weights e, the operator is
//!
//! ```text
//! Wf(x) = Σ_{s ∈ N(x)} d_{x,s} · max_a Σ_{s'} p(s,a,s') (R(s,a,s') + β f(group(s')))
//! ```
//!
//! W is a β-contraction; its fixed point f* satisfies
//! `|V(s) − f*(x)| ≤ ε/(1−β)` for s ∈ N(x), where ε is the largest
//! within-group spread of the exact value function.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg;
use crate::mdp::{FiniteMdp, SolveStats, ValueVector};

/// Hard partition of original states into aggregate states plus
/// disaggregation weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationMap {
    n_aggregates: usize,
    /// Aggregate index per original state; defines N(x) as a total partition.
    membership: Vec<usize>,
    /// d_{x,s} per original state; positive, sums to 1 inside each group.
    d_weights: Vec<f64>,
}

/// Values on the aggregate space.
pub type AggValueVector = Vec<f64>;

impl AggregationMap {
    /// Builds a map with explicit disaggregation weights.
    pub fn new(n_aggregates: usize, membership: Vec<usize>, d_weights: Vec<f64>) -> Result<Self> {
        if membership.len() != d_weights.len() {
            return Err(Error::DimensionMismatch(
                "membership and d-weights differ in length".into(),
            ));
        }
        if n_aggregates == 0 {
            return Err(Error::InvalidParameter("need at least one aggregate".into()));
        }
        let mut totals = vec![0.0; n_aggregates];
        let mut sizes = vec![0usize; n_aggregates];
        for (s, (&x, &d)) in membership.iter().zip(&d_weights).enumerate() {
            if x >= n_aggregates {
                return Err(Error::InvalidModel(format!(
                    "state {s} maps to aggregate {x}, only {n_aggregates} exist"
                )));
            }
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::InvalidModel(format!(
                    "d-weight of state {s} must be positive, got {d}"
                )));
            }
            totals[x] += d;
            sizes[x] += 1;
        }
        for (x, (&total, &size)) in totals.iter().zip(&sizes).enumerate() {
            if size == 0 {
                return Err(Error::InvalidModel(format!("aggregate {x} is empty")));
            }
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidModel(format!(
                    "d-weights of aggregate {x} sum to {total}, not 1"
                )));
            }
        }
        Ok(Self {
            n_aggregates,
            membership,
            d_weights,
        })
    }

    /// Uniform weights d_{x,s} = 1/|N(x)| — the default choice.
    pub fn uniform(n_aggregates: usize, membership: Vec<usize>) -> Result<Self> {
        let mut sizes = vec![0usize; n_aggregates];
        for &x in &membership {
            if x >= n_aggregates {
                return Err(Error::InvalidModel(format!(
                    "membership references aggregate {x}, only {n_aggregates} exist"
                )));
            }
            sizes[x] += 1;
        }
        if sizes.iter().any(|&c| c == 0) {
            return Err(Error::InvalidModel("an aggregate is empty".into()));
        }
        let d_weights = membership.iter().map(|&x| 1.0 / sizes[x] as f64).collect();
        Self::new(n_aggregates, membership, d_weights)
    }

    /// Identity aggregation: each state its own aggregate.
    pub fn identity(n_states: usize) -> Self {
        Self::uniform(n_states, (0..n_states).collect()).expect("identity map is valid")
    }

    pub fn n_aggregates(&self) -> usize {
        self.n_aggregates
    }

    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    pub fn d_weights(&self) -> &[f64] {
        &self.d_weights
    }

    fn check_model(&self, mdp: &FiniteMdp) -> Result<()> {
        if self.membership.len() != mdp.n_states() {
            return Err(Error::DimensionMismatch(format!(
                "aggregation covers {} states, model has {}",
                self.membership.len(),
                mdp.n_states()
            )));
        }
        Ok(())
    }
}

/// One application of the aggregate operator W.
pub fn aggregate_operator_apply(
    mdp: &FiniteMdp,
    agg: &AggregationMap,
    f: &[f64],
) -> Result<AggValueVector> {
    agg.check_model(mdp)?;
    if f.len() != agg.n_aggregates() {
        return Err(Error::DimensionMismatch(format!(
            "aggregate value vector has length {}, expected {}",
            f.len(),
            agg.n_aggregates()
        )));
    }
    let beta = mdp.discount();
    let mut out = vec![0.0; agg.n_aggregates()];
    for s in 0..mdp.n_states() {
        let mut best = f64::NEG_INFINITY;
        for &a in mdp.feasible(s) {
            let mut v = 0.0;
            for t in mdp.arcs(s, a)? {
                v += t.prob * (t.reward + beta * f[agg.membership[t.next]]);
            }
            best = best.max(v);
        }
        out[agg.membership[s]] += agg.d_weights[s] * best;
    }
    Ok(out)
}

/// Fixed-point iteration on W with the same residual-to-distance stopping
/// rule as value iteration.
pub fn solve_aggregate(
    mdp: &FiniteMdp,
    agg: &AggregationMap,
    tol: f64,
) -> Result<(AggValueVector, SolveStats)> {
    mdp.require_discounted()?;
    agg.check_model(mdp)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {tol}")));
    }
    let beta = mdp.discount();
    let threshold = if beta == 0.0 {
        f64::INFINITY
    } else {
        tol * (1.0 - beta) / (2.0 * beta)
    };
    let start = Instant::now();
    let mut f = vec![0.0; agg.n_aggregates()];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < 1_000_000 {
        let next = aggregate_operator_apply(mdp, agg, &f)?;
        residual = linalg::sup_dist(&next, &f);
        f = next;
        iterations += 1;
        if residual <= threshold {
            converged = true;
            break;
        }
    }
    Ok((
        f,
        SolveStats {
            iterations,
            final_residual: residual,
            wall_time_secs: start.elapsed().as_secs_f64(),
            converged,
        },
    ))
}

/// The Theorem-level error certificate for an aggregation: ε (largest
/// within-group spread of the exact V), the bound ε/(1−β), and the measured
/// worst deviation `max_x max_{s ∈ N(x)} |V(s) − f*(x)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregationErrorReport {
    pub epsilon: f64,
    pub bound: f64,
    pub max_deviation: f64,
}

pub fn aggregation_error_bound(
    mdp: &FiniteMdp,
    agg: &AggregationMap,
    v_exact: &ValueVector,
    f_star: &[f64],
) -> Result<AggregationErrorReport> {
    agg.check_model(mdp)?;
    if v_exact.len() != mdp.n_states() || f_star.len() != agg.n_aggregates() {
        return Err(Error::DimensionMismatch(
            "value vectors do not match the model/aggregation".into(),
        ));
    }
    let mut group_min = vec![f64::INFINITY; agg.n_aggregates()];
    let mut group_max = vec![f64::NEG_INFINITY; agg.n_aggregates()];
    let mut max_deviation: f64 = 0.0;
    for (s, &x) in agg.membership.iter().enumerate() {
        group_min[x] = group_min[x].min(v_exact[s]);
        group_max[x] = group_max[x].max(v_exact[s]);
        max_deviation = max_deviation.max((v_exact[s] - f_star[x]).abs());
    }
    let epsilon = group_max
        .iter()
        .zip(&group_min)
        .map(|(hi, lo)| hi - lo)
        .fold(0.0, f64::max);
    Ok(AggregationErrorReport {
        epsilon,
        bound: epsilon / (1.0 - mdp.discount()),
        max_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{bellman_apply, value_iteration, FiniteMdp};

    fn three_state(beta: f64) -> FiniteMdp {
        FiniteMdp::new(
            3,
            2,
            beta,
            vec![vec![0, 1], vec![0, 1], vec![0]],
            &[
                (0, 0, 1, 1.0, 1.0),
                (0, 1, 2, 1.0, 0.5),
                (1, 0, 0, 0.5, 2.0),
                (1, 0, 2, 0.5, 0.0),
                (1, 1, 1, 1.0, 1.0),
                (2, 0, 0, 1.0, 3.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn identity_aggregation_is_bellman() {
        let mdp = three_state(0.9);
        let agg = AggregationMap::identity(3);
        let f = vec![0.4, -1.0, 2.0];
        assert_eq!(
            aggregate_operator_apply(&mdp, &agg, &f).unwrap(),
            bellman_apply(&mdp, &f).unwrap()
        );
    }

    #[test]
    fn constant_input_discounting() {
        // f ≡ c  ⇒  Wf(x) = Σ d_{x,s} max_a r(s,a) + βc.
        let mdp = three_state(0.5);
        let agg = AggregationMap::uniform(1, vec![0, 0, 0]).unwrap();
        let c = 4.0;
        let out = aggregate_operator_apply(&mdp, &agg, &[c]).unwrap();
        let mut expected = 0.0;
        for s in 0..3 {
            let best = mdp
                .feasible(s)
                .iter()
                .map(|&a| mdp.expected_reward(s, a).unwrap())
                .fold(f64::NEG_INFINITY, f64::max);
            expected += best / 3.0;
        }
        expected += 0.5 * c;
        assert!((out[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn single_aggregate_hand_expansion() {
        // Uniform d over all three states with constant continuation f(x).
        let mdp = three_state(0.9);
        let agg = AggregationMap::uniform(1, vec![0, 0, 0]).unwrap();
        let f = vec![1.5];
        let out = aggregate_operator_apply(&mdp, &agg, &f).unwrap();
        let mut expected = 0.0;
        for s in 0..3 {
            let best = mdp
                .feasible(s)
                .iter()
                .map(|&a| mdp.expected_reward(s, a).unwrap() + 0.9 * 1.5)
                .fold(f64::NEG_INFINITY, f64::max);
            expected += best / 3.0;
        }
        assert!((out[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn trivial_aggregation_recovers_value_function() {
        let mdp = three_state(0.9);
        let agg = AggregationMap::identity(3);
        let (f_star, stats) = solve_aggregate(&mdp, &agg, 1e-8).unwrap();
        assert!(stats.converged);
        let (v, _) = value_iteration(&mdp, &[0.0; 3], 1e-8, 1_000_000).unwrap();
        for (a, b) in f_star.iter().zip(&v) {
            assert!((a - b).abs() < 2e-8);
        }
    }

    #[test]
    fn duplicate_states_zero_epsilon() {
        // Two exactly identical states grouped together: ε = 0, f* exact.
        let mdp = FiniteMdp::new(
            3,
            1,
            0.9,
            vec![vec![0], vec![0], vec![0]],
            &[
                (0, 0, 2, 1.0, 1.0),
                (1, 0, 2, 1.0, 1.0),
                (2, 0, 2, 1.0, 0.0),
            ],
        )
        .unwrap();
        let agg = AggregationMap::uniform(2, vec![0, 0, 1]).unwrap();
        let (f_star, _) = solve_aggregate(&mdp, &agg, 1e-10).unwrap();
        let (v, _) = value_iteration(&mdp, &[0.0; 3], 1e-10, 1_000_000).unwrap();
        let report = aggregation_error_bound(&mdp, &agg, &v, &f_star).unwrap();
        assert!(report.epsilon < 1e-9);
        assert!(report.max_deviation <= report.bound + 1e-8);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(AggregationMap::new(1, vec![0, 0], vec![0.5, 0.6]).is_err());
        assert!(AggregationMap::new(2, vec![0, 0], vec![0.5, 0.5]).is_err()); // empty group
    }
}
