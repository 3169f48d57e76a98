//! Finite Markov decision processes and the exact dynamic-programming
//! operators that act on them.
//!
//! A model is the tuple (S, A, Γ, p, r, β) restricted to finite state and
//! action sets: `n_states` states, `n_actions` actions, a nonempty feasible
//! set Γ(s) per state, a transition kernel p(s,a,s') with per-transition
//! rewards R(s,a,s'), and a discount factor β. The expected one-step reward
//! r(s,a) = Σ_{s'} p(s,a,s') R(s,a,s') is always derived from the kernel,
//! never stored independently.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance for probability rows summing to one.
pub const ROW_SUM_TOL: f64 = 1e-12;

/// One weighted arc of the transition kernel: p(s,a,`next`) = `prob` with
/// per-transition reward R(s,a,`next`) = `reward`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub next: usize,
    pub prob: f64,
    pub reward: f64,
}

/// A finite MDP. Immutable after construction; all operators are pure
/// functions, so values may be shared freely across threads.
#[derive(Debug, Clone)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    discount: f64,
    /// Sorted feasible action indices per state (Γ(s), nonempty).
    feasible: Vec<Vec<usize>>,
    /// Arcs per state, aligned with `feasible`: `arcs[s][k]` belongs to
    /// action `feasible[s][k]`.
    arcs: Vec<Vec<Vec<Arc>>>,
    /// Cached expected rewards r(s,a) = Σ p·R, aligned like `arcs`.
    exp_reward: Vec<Vec<f64>>,
}

impl FiniteMdp {
    /// Builds and validates a model from a flat transition list
    /// `(s, a, s', p, R)`. Feasibility is explicit; every listed transition
    /// must belong to a feasible pair, and every feasible pair must carry a
    /// probability row summing to one within `ROW_SUM_TOL`.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        discount: f64,
        feasible: Vec<Vec<usize>>,
        transitions: &[(usize, usize, usize, f64, f64)],
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidModel(
                "state and action counts must be positive".into(),
            ));
        }
        if !(discount.is_finite() && (0.0..=1.0).contains(&discount)) {
            return Err(Error::InvalidModel(format!(
                "discount must lie in [0, 1], got {discount}"
            )));
        }
        if feasible.len() != n_states {
            return Err(Error::InvalidModel(format!(
                "feasible sets given for {} states, expected {n_states}",
                feasible.len()
            )));
        }
        let mut feasible = feasible;
        for (s, acts) in feasible.iter_mut().enumerate() {
            acts.sort_unstable();
            acts.dedup();
            if acts.is_empty() {
                return Err(Error::InvalidModel(format!(
                    "feasible set of state {s} is empty"
                )));
            }
            if let Some(&a) = acts.iter().find(|&&a| a >= n_actions) {
                return Err(Error::InvalidModel(format!(
                    "state {s} lists action {a} but only {n_actions} actions exist"
                )));
            }
        }

        let mut arcs: Vec<Vec<Vec<Arc>>> = feasible
            .iter()
            .map(|acts| vec![Vec::new(); acts.len()])
            .collect();
        for &(s, a, next, prob, reward) in transitions {
            if s >= n_states || next >= n_states {
                return Err(Error::InvalidModel(format!(
                    "transition ({s},{a},{next}) references a state out of range"
                )));
            }
            let Some(k) = feasible[s].iter().position(|&fa| fa == a) else {
                return Err(Error::InvalidModel(format!(
                    "transition for infeasible pair (s={s}, a={a})"
                )));
            };
            if !(prob.is_finite() && prob >= 0.0) {
                return Err(Error::InvalidModel(format!(
                    "p({s},{a},{next}) = {prob} is not a probability"
                )));
            }
            if !reward.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "R({s},{a},{next}) = {reward} is not finite"
                )));
            }
            if prob > 0.0 {
                arcs[s][k].push(Arc { next, prob, reward });
            }
        }

        let mut exp_reward = Vec::with_capacity(n_states);
        for s in 0..n_states {
            let mut row = Vec::with_capacity(feasible[s].len());
            for (k, &a) in feasible[s].iter().enumerate() {
                let total: f64 = arcs[s][k].iter().map(|t| t.prob).sum();
                if (total - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidModel(format!(
                        "probabilities for (s={s}, a={a}) sum to {total}, not 1"
                    )));
                }
                row.push(arcs[s][k].iter().map(|t| t.prob * t.reward).sum());
            }
            exp_reward.push(row);
        }

        Ok(Self {
            n_states,
            n_actions,
            discount,
            feasible,
            arcs,
            exp_reward,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    /// Returns a copy of the model with a different discount factor.
    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        if !(discount.is_finite() && (0.0..=1.0).contains(&discount)) {
            return Err(Error::InvalidModel(format!(
                "discount must lie in [0, 1], got {discount}"
            )));
        }
        let mut out = self.clone();
        out.discount = discount;
        Ok(out)
    }

    /// Feasible action indices Γ(s), sorted ascending.
    pub fn feasible(&self, s: usize) -> &[usize] {
        &self.feasible[s]
    }

    /// Position of action `a` within Γ(s), if feasible.
    pub fn action_pos(&self, s: usize, a: usize) -> Option<usize> {
        self.feasible[s].iter().position(|&fa| fa == a)
    }

    /// Transition arcs for a feasible pair.
    pub fn arcs(&self, s: usize, a: usize) -> Result<&[Arc]> {
        let k = self
            .action_pos(s, a)
            .ok_or(Error::InfeasibleAction { state: s, action: a })?;
        Ok(&self.arcs[s][k])
    }

    /// Expected one-step reward r(s,a) = Σ_{s'} p(s,a,s') R(s,a,s').
    pub fn expected_reward(&self, s: usize, a: usize) -> Result<f64> {
        let k = self
            .action_pos(s, a)
            .ok_or(Error::InfeasibleAction { state: s, action: a })?;
        Ok(self.exp_reward[s][k])
    }

    /// One-step lookahead Q(s,a,f) = r(s,a) + β Σ_{s'} p(s,a,s') f(s').
    pub fn q_value(&self, s: usize, a: usize, f: &[f64]) -> Result<f64> {
        let k = self
            .action_pos(s, a)
            .ok_or(Error::InfeasibleAction { state: s, action: a })?;
        let cont: f64 = self.arcs[s][k].iter().map(|t| t.prob * f[t.next]).sum();
        Ok(self.exp_reward[s][k] + self.discount * cont)
    }

    /// Fails unless the model can be fed to a discounted solver (β < 1).
    pub fn require_discounted(&self) -> Result<()> {
        if self.discount < 1.0 {
            Ok(())
        } else {
            Err(Error::DiscountNotLessThanOne(self.discount))
        }
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.n_states {
            return Err(Error::DimensionMismatch(format!(
                "value vector has length {}, model has {} states",
                f.len(),
                self.n_states
            )));
        }
        Ok(())
    }
}

/// A value function: one real per state.
pub type ValueVector = Vec<f64>;

/// Tabular Q-function defined exactly on feasible pairs; `rows[s][k]` is
/// Q(s, Γ(s)[k]).
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    rows: Vec<Vec<f64>>,
}

impl QTable {
    pub fn zeros(mdp: &FiniteMdp) -> Self {
        Self {
            rows: (0..mdp.n_states())
                .map(|s| vec![0.0; mdp.feasible(s).len()])
                .collect(),
        }
    }

    pub fn constant(mdp: &FiniteMdp, c: f64) -> Self {
        Self {
            rows: (0..mdp.n_states())
                .map(|s| vec![c; mdp.feasible(s).len()])
                .collect(),
        }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn get(&self, mdp: &FiniteMdp, s: usize, a: usize) -> Result<f64> {
        let k = mdp
            .action_pos(s, a)
            .ok_or(Error::InfeasibleAction { state: s, action: a })?;
        Ok(self.rows[s][k])
    }

    pub fn set(&mut self, mdp: &FiniteMdp, s: usize, a: usize, v: f64) -> Result<()> {
        let k = mdp
            .action_pos(s, a)
            .ok_or(Error::InfeasibleAction { state: s, action: a })?;
        self.rows[s][k] = v;
        Ok(())
    }

    /// max_a Q(s,a) over the feasible row.
    pub fn row_max(&self, s: usize) -> f64 {
        self.rows[s].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// The value function induced by the table: s ↦ max_a Q(s,a).
    pub fn greedy_values(&self) -> ValueVector {
        (0..self.rows.len()).map(|s| self.row_max(s)).collect()
    }

    /// Sup-norm distance between two tables with identical shape.
    pub fn sup_dist(&self, other: &QTable) -> f64 {
        self.rows
            .iter()
            .zip(&other.rows)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// One action per state, always inside Γ(s).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicPolicy {
    pub actions: Vec<usize>,
}

impl DeterministicPolicy {
    pub fn new(mdp: &FiniteMdp, actions: Vec<usize>) -> Result<Self> {
        if actions.len() != mdp.n_states() {
            return Err(Error::DimensionMismatch(format!(
                "policy has {} entries, model has {} states",
                actions.len(),
                mdp.n_states()
            )));
        }
        for (s, &a) in actions.iter().enumerate() {
            if mdp.action_pos(s, a).is_none() {
                return Err(Error::InfeasibleAction { state: s, action: a });
            }
        }
        Ok(Self { actions })
    }

    /// Point-mass stochastic representation of the policy.
    pub fn to_stochastic(&self, mdp: &FiniteMdp) -> StochasticPolicy {
        let mut probs = vec![vec![0.0; mdp.n_actions()]; mdp.n_states()];
        for (s, &a) in self.actions.iter().enumerate() {
            probs[s][a] = 1.0;
        }
        StochasticPolicy { probs }
    }
}

/// Per-state distribution over actions with support inside Γ(s).
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticPolicy {
    /// Full row of length `n_actions` per state; infeasible entries must be 0.
    pub probs: Vec<Vec<f64>>,
}

impl StochasticPolicy {
    pub fn new(mdp: &FiniteMdp, probs: Vec<Vec<f64>>) -> Result<Self> {
        if probs.len() != mdp.n_states() {
            return Err(Error::DimensionMismatch(format!(
                "policy has {} rows, model has {} states",
                probs.len(),
                mdp.n_states()
            )));
        }
        for (s, row) in probs.iter().enumerate() {
            if row.len() != mdp.n_actions() {
                return Err(Error::DimensionMismatch(format!(
                    "policy row {s} has {} entries, expected {}",
                    row.len(),
                    mdp.n_actions()
                )));
            }
            let mut total = 0.0;
            for (a, &p) in row.iter().enumerate() {
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::InvalidModel(format!(
                        "π({s},{a}) = {p} is not a probability"
                    )));
                }
                if p > 0.0 && mdp.action_pos(s, a).is_none() {
                    return Err(Error::InfeasibleAction { state: s, action: a });
                }
                total += p;
            }
            if (total - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidModel(format!(
                    "policy row {s} sums to {total}, not 1"
                )));
            }
        }
        Ok(Self { probs })
    }

    /// Uniform distribution over every feasible set.
    pub fn uniform(mdp: &FiniteMdp) -> Self {
        let mut probs = vec![vec![0.0; mdp.n_actions()]; mdp.n_states()];
        for (s, row) in probs.iter_mut().enumerate() {
            let acts = mdp.feasible(s);
            let p = 1.0 / acts.len() as f64;
            for &a in acts {
                row[a] = p;
            }
        }
        Self { probs }
    }
}

/// Solver bookkeeping returned next to results.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub final_residual: f64,
    pub wall_time_secs: f64,
    /// False when the iteration budget ran out before the stopping rule hit.
    pub converged: bool,
}

/// The Bellman optimality operator:
/// `Tf(s) = max_{a ∈ Γ(s)} r(s,a) + β Σ_{s'} p(s,a,s') f(s')`.
pub fn bellman_apply(mdp: &FiniteMdp, f: &[f64]) -> Result<ValueVector> {
    mdp.check_len(f)?;
    let beta = mdp.discount();
    let mut out = Vec::with_capacity(mdp.n_states());
    for s in 0..mdp.n_states() {
        let mut best = f64::NEG_INFINITY;
        for (k, _) in mdp.feasible[s].iter().enumerate() {
            let cont: f64 = mdp.arcs[s][k].iter().map(|t| t.prob * f[t.next]).sum();
            best = best.max(mdp.exp_reward[s][k] + beta * cont);
        }
        out.push(best);
    }
    Ok(out)
}

/// The policy operator `T_π f(s) = Σ_a π(s,a)[ r(s,a) + β Σ p f ]`.
pub fn bellman_policy_apply(
    mdp: &FiniteMdp,
    policy: &StochasticPolicy,
    f: &[f64],
) -> Result<ValueVector> {
    mdp.check_len(f)?;
    let beta = mdp.discount();
    let mut out = Vec::with_capacity(mdp.n_states());
    for s in 0..mdp.n_states() {
        let mut acc = 0.0;
        for (a, &p) in policy.probs[s].iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let k = mdp
                .action_pos(s, a)
                .ok_or(Error::InfeasibleAction { state: s, action: a })?;
            let cont: f64 = mdp.arcs[s][k].iter().map(|t| t.prob * f[t.next]).sum();
            acc += p * (mdp.exp_reward[s][k] + beta * cont);
        }
        out.push(acc);
    }
    Ok(out)
}

/// Deterministic-policy specialization of [`bellman_policy_apply`].
pub fn bellman_deterministic_apply(
    mdp: &FiniteMdp,
    policy: &DeterministicPolicy,
    f: &[f64],
) -> Result<ValueVector> {
    mdp.check_len(f)?;
    let beta = mdp.discount();
    let mut out = Vec::with_capacity(mdp.n_states());
    for (s, &a) in policy.actions.iter().enumerate() {
        let k = mdp
            .action_pos(s, a)
            .ok_or(Error::InfeasibleAction { state: s, action: a })?;
        let cont: f64 = mdp.arcs[s][k].iter().map(|t| t.prob * f[t.next]).sum();
        out.push(mdp.exp_reward[s][k] + beta * cont);
    }
    Ok(out)
}

/// The Q-operator `HQ(s,a) = Σ_{s'} p(s,a,s') ( R(s,a,s') + β max_{a'} Q(s',a') )`.
pub fn q_backup(mdp: &FiniteMdp, q: &QTable) -> Result<QTable> {
    if q.rows.len() != mdp.n_states()
        || q.rows
            .iter()
            .enumerate()
            .any(|(s, row)| row.len() != mdp.feasible(s).len())
    {
        return Err(Error::DimensionMismatch(
            "Q-table shape does not match the model's feasible pairs".into(),
        ));
    }
    let beta = mdp.discount();
    let maxes: Vec<f64> = (0..mdp.n_states()).map(|s| q.row_max(s)).collect();
    let mut rows = Vec::with_capacity(mdp.n_states());
    for s in 0..mdp.n_states() {
        let mut row = Vec::with_capacity(mdp.feasible(s).len());
        for k in 0..mdp.feasible[s].len() {
            let v: f64 = mdp.arcs[s][k]
                .iter()
                .map(|t| t.prob * (t.reward + beta * maxes[t.next]))
                .sum();
            row.push(v);
        }
        rows.push(row);
    }
    Ok(QTable { rows })
}

/// Value iteration `f_{k+1} = T f_k` with the residual stopping rule
/// `‖f_{k+1} − f_k‖∞ ≤ tol (1−β)/(2β)`, which guarantees `‖f − V‖∞ ≤ tol`
/// by the contraction bound. With β = 0 a single sweep is exact.
pub fn value_iteration(
    mdp: &FiniteMdp,
    init: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(ValueVector, SolveStats)> {
    mdp.require_discounted()?;
    mdp.check_len(init)?;
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
    let mut f = init.to_vec();
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let next = bellman_apply(mdp, &f)?;
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

/// Noisy value iteration `f_{k+1} = T f_k + e_k` with `‖e_k‖∞ ≤ δ` (uniform
/// per-entry noise). Returns the sup-distance of every iterate to the exact
/// value function; the tail must obey `limsup d(f_k, V) ≤ δ/(1−β)`.
pub fn approximate_value_iteration(
    mdp: &FiniteMdp,
    init: &[f64],
    noise_amplitude: f64,
    seed: u64,
    iters: usize,
) -> Result<Vec<f64>> {
    mdp.require_discounted()?;
    mdp.check_len(init)?;
    if noise_amplitude < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise amplitude must be ≥ 0, got {noise_amplitude}"
        )));
    }
    let (v_star, _) = value_iteration(mdp, &vec![0.0; mdp.n_states()], 1e-10, 1_000_000)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = init.to_vec();
    let mut dists = Vec::with_capacity(iters);
    for _ in 0..iters {
        let mut next = bellman_apply(mdp, &f)?;
        if noise_amplitude > 0.0 {
            for x in next.iter_mut() {
                *x += rng.gen_range(-noise_amplitude..=noise_amplitude);
            }
        }
        f = next;
        dists.push(linalg::sup_dist(&f, &v_star));
    }
    Ok(dists)
}

/// How `policy_evaluation` should compute V_π.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    /// Fixed-point iteration on T_π.
    Iterative,
    /// Direct solve of (I − βP_π) V = r_π by Gaussian elimination.
    Direct,
}

/// Evaluates a stochastic policy: the unique fixed point of T_π.
pub fn policy_evaluation(
    mdp: &FiniteMdp,
    policy: &StochasticPolicy,
    method: EvalMethod,
) -> Result<ValueVector> {
    mdp.require_discounted()?;
    match method {
        EvalMethod::Iterative => {
            // Iterate until the successive residual is ≤ 1e-11; since the
            // returned iterate is T_π applied to its predecessor, this leaves
            // a T_π-residual ≤ β·1e-11 < 1e-10. A stall guard stops the loop
            // once floating-point resolution is reached.
            let mut f = vec![0.0; mdp.n_states()];
            let mut prev_residual = f64::INFINITY;
            for _ in 0..5_000_000usize {
                let next = bellman_policy_apply(mdp, policy, &f)?;
                let residual = linalg::sup_dist(&next, &f);
                f = next;
                if residual <= 1e-11 || residual >= prev_residual && residual < 1e-8 {
                    break;
                }
                prev_residual = residual;
            }
            Ok(f)
        }
        EvalMethod::Direct => {
            let n = mdp.n_states();
            let kernel = policy_kernel_matrix(mdp, policy)?;
            let r_pi = policy_expected_rewards(mdp, policy)?;
            let beta = mdp.discount();
            let mut a = vec![vec![0.0; n]; n];
            for (i, row) in a.iter_mut().enumerate() {
                for (j, entry) in row.iter_mut().enumerate() {
                    *entry = (i == j) as usize as f64 - beta * kernel[i][j];
                }
            }
            linalg::solve_dense(&a, &r_pi)
        }
    }
}

/// The row-stochastic kernel K_π(s,s') = Σ_a π(s,a) p(s,a,s').
pub fn policy_kernel_matrix(mdp: &FiniteMdp, policy: &StochasticPolicy) -> Result<Vec<Vec<f64>>> {
    let n = mdp.n_states();
    let mut kernel = vec![vec![0.0; n]; n];
    for s in 0..n {
        for (a, &p) in policy.probs[s].iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for t in mdp.arcs(s, a)? {
                kernel[s][t.next] += p * t.prob;
            }
        }
    }
    Ok(kernel)
}

/// Expected one-step reward under a policy: r_π(s) = Σ_a π(s,a) r(s,a).
pub fn policy_expected_rewards(mdp: &FiniteMdp, policy: &StochasticPolicy) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(mdp.n_states());
    for s in 0..mdp.n_states() {
        let mut acc = 0.0;
        for (a, &p) in policy.probs[s].iter().enumerate() {
            if p > 0.0 {
                acc += p * mdp.expected_reward(s, a)?;
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Greedy policy extraction: `action(s) = argmax_{a ∈ Γ(s)} Q(s,a,f)` with
/// ties broken by the lowest action index.
pub fn greedy_policy(mdp: &FiniteMdp, f: &[f64]) -> Result<DeterministicPolicy> {
    mdp.check_len(f)?;
    let mut actions = Vec::with_capacity(mdp.n_states());
    for s in 0..mdp.n_states() {
        let mut best_a = mdp.feasible(s)[0];
        let mut best_v = f64::NEG_INFINITY;
        for &a in mdp.feasible(s) {
            let v = mdp.q_value(s, a, f)?;
            // Strict improvement only: keeps the lowest index on ties.
            if v > best_v {
                best_v = v;
                best_a = a;
            }
        }
        actions.push(best_a);
    }
    Ok(DeterministicPolicy { actions })
}

/// Samples `n_pairs` random pairs (f, g) and reports the largest observed
/// ratio `‖Tf − Tg‖∞ / ‖f − g‖∞`. Lemma-level guarantee: ≤ β.
pub fn contraction_estimate(mdp: &FiniteMdp, n_pairs: usize, seed: u64) -> Result<f64> {
    if n_pairs == 0 {
        return Err(Error::InvalidParameter("n_pairs must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = mdp.n_states();
    let mut worst: f64 = 0.0;
    for _ in 0..n_pairs {
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let dist = linalg::sup_dist(&f, &g);
        if dist < 1e-12 {
            continue; // degenerate pair
        }
        let tf = bellman_apply(mdp, &f)?;
        let tg = bellman_apply(mdp, &g)?;
        worst = worst.max(linalg::sup_dist(&tf, &tg) / dist);
    }
    Ok(worst)
}

/// Enumerates every deterministic policy (product over Γ(s)). Usable only at
/// desk scale; intended as a brute-force optimality oracle in tests.
pub fn enumerate_deterministic_policies(mdp: &FiniteMdp) -> Vec<DeterministicPolicy> {
    let mut out = Vec::new();
    let mut current = vec![0usize; mdp.n_states()];
    fn recurse(
        mdp: &FiniteMdp,
        s: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<DeterministicPolicy>,
    ) {
        if s == mdp.n_states() {
            out.push(DeterministicPolicy {
                actions: current.clone(),
            });
            return;
        }
        for &a in mdp.feasible(s) {
            current[s] = a;
            recurse(mdp, s + 1, current, out);
        }
    }
    recurse(mdp, 0, &mut current, &mut out);
    out
}

/// Seeded random benchmark model. Every action is feasible in every state;
/// each state-action pair transitions to `support` distinct successor states
/// (all of them when `support ≥ n_states`, which makes every policy ergodic)
/// with probabilities bounded away from zero, and rewards drawn uniformly
/// from `reward_range`.
pub fn random_mdp(
    n_states: usize,
    n_actions: usize,
    discount: f64,
    support: usize,
    reward_range: (f64, f64),
    seed: u64,
) -> Result<FiniteMdp> {
    if n_states == 0 || n_actions == 0 {
        return Err(Error::InvalidParameter(
            "random model needs at least one state and action".into(),
        ));
    }
    let support = support.clamp(1, n_states).max(1);
    let (lo, hi) = reward_range;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidParameter(format!(
            "bad reward range [{lo}, {hi}]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut transitions = Vec::with_capacity(n_states * n_actions * support);
    for s in 0..n_states {
        for a in 0..n_actions {
            // Partial shuffle for `support` distinct successors.
            let mut pool: Vec<usize> = (0..n_states).collect();
            for i in 0..support {
                let j = rng.gen_range(i..n_states);
                pool.swap(i, j);
            }
            let weights: Vec<f64> = (0..support).map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = weights.iter().sum();
            let mut acc = 0.0;
            for (i, w) in weights.iter().enumerate() {
                // Exact unit row sum: last successor takes the remainder.
                let p = if i + 1 == support { 1.0 - acc } else { w / total };
                acc += p;
                let reward = rng.gen_range(lo..=hi);
                transitions.push((s, a, pool[i], p, reward));
            }
        }
    }
    let feasible = vec![(0..n_actions).collect::<Vec<_>>(); n_states];
    FiniteMdp::new(n_states, n_actions, discount, feasible, &transitions)
}

/// Seeded random policy placing probability bounded away from zero on every
/// feasible action.
pub fn random_stochastic_policy(mdp: &FiniteMdp, seed: u64) -> StochasticPolicy {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probs = vec![vec![0.0; mdp.n_actions()]; mdp.n_states()];
    for s in 0..mdp.n_states() {
        let feas = mdp.feasible(s);
        let weights: Vec<f64> = feas.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        for (i, (&a, w)) in feas.iter().zip(&weights).enumerate() {
            let p = if i + 1 == feas.len() { 1.0 - acc } else { w / total };
            acc += p;
            probs[s][a] = p;
        }
    }
    StochasticPolicy::new(mdp, probs).expect("constructed rows are valid distributions")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Hand-checkable 2-state, 2-action model used across unit tests.
    ///
    /// State 0: action 0 stays (r = 1), action 1 moves to state 1 (r = 0).
    /// State 1: action 0 stays (r = 2), action 1 moves to state 0 (r = 3).
    pub(crate) fn two_state(beta: f64) -> FiniteMdp {
        FiniteMdp::new(
            2,
            2,
            beta,
            vec![vec![0, 1], vec![0, 1]],
            &[
                (0, 0, 0, 1.0, 1.0),
                (0, 1, 1, 1.0, 0.0),
                (1, 0, 1, 1.0, 2.0),
                (1, 1, 0, 1.0, 3.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_row_sum() {
        let err = FiniteMdp::new(
            1,
            1,
            0.9,
            vec![vec![0]],
            &[(0, 0, 0, 0.99, 0.0)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn rejects_empty_feasible_set() {
        let err = FiniteMdp::new(2, 1, 0.9, vec![vec![0], vec![]], &[(0, 0, 0, 1.0, 0.0)])
            .unwrap_err();
        assert!(matches!(err, Error::InvalidModel(_)));
    }

    #[test]
    fn bellman_discount_zero_is_reward_max() {
        let mdp = two_state(0.0);
        let out = bellman_apply(&mdp, &[5.0, -7.0]).unwrap();
        assert_eq!(out, vec![1.0, 3.0]);
    }

    #[test]
    fn bellman_zero_rewards_zero_fixed_point() {
        let mdp = FiniteMdp::new(
            2,
            1,
            0.9,
            vec![vec![0], vec![0]],
            &[(0, 0, 1, 1.0, 0.0), (1, 0, 0, 1.0, 0.0)],
        )
        .unwrap();
        assert_eq!(bellman_apply(&mdp, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn bellman_matches_hand_expansion() {
        // f = (1, 2), β = 0.5:
        // state 0: max(1 + 0.5·1, 0 + 0.5·2) = max(1.5, 1.0) = 1.5
        // state 1: max(2 + 0.5·2, 3 + 0.5·1) = max(3.0, 3.5) = 3.5
        let mdp = two_state(0.5);
        let out = bellman_apply(&mdp, &[1.0, 2.0]).unwrap();
        assert_eq!(out, vec![1.5, 3.5]);
    }

    #[test]
    fn policy_apply_uniform_hand_average() {
        // Uniform policy, f = (1, 2), β = 0.5:
        // state 0: ½(1 + 0.5·1) + ½(0 + 0.5·2) = ½·1.5 + ½·1.0 = 1.25
        // state 1: ½(2 + 0.5·2) + ½(3 + 0.5·1) = ½·3.0 + ½·3.5 = 3.25
        let mdp = two_state(0.5);
        let pi = StochasticPolicy::uniform(&mdp);
        let out = bellman_policy_apply(&mdp, &pi, &[1.0, 2.0]).unwrap();
        assert_eq!(out, vec![1.25, 3.25]);
    }

    #[test]
    fn greedy_policy_attains_bellman_max() {
        let mdp = two_state(0.9);
        let f = vec![0.3, -1.2];
        let greedy = greedy_policy(&mdp, &f).unwrap();
        let via_policy = bellman_deterministic_apply(&mdp, &greedy, &f).unwrap();
        let via_max = bellman_apply(&mdp, &f).unwrap();
        assert_eq!(via_policy, via_max);
    }

    #[test]
    fn q_backup_constant_table_is_discounting() {
        // q ≡ c  ⇒  HQ(s,a) = r(s,a) + βc.
        let mdp = two_state(0.5);
        let hq = q_backup(&mdp, &QTable::constant(&mdp, 4.0)).unwrap();
        for s in 0..2 {
            for &a in mdp.feasible(s) {
                let expected = mdp.expected_reward(s, a).unwrap() + 0.5 * 4.0;
                assert!((hq.get(&mdp, s, a).unwrap() - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn q_backup_discount_zero_is_expected_reward() {
        let mdp = two_state(0.0);
        let hq = q_backup(&mdp, &QTable::constant(&mdp, 9.0)).unwrap();
        for s in 0..2 {
            for &a in mdp.feasible(s) {
                assert_eq!(
                    hq.get(&mdp, s, a).unwrap(),
                    mdp.expected_reward(s, a).unwrap()
                );
            }
        }
    }

    #[test]
    fn q_v_consistency() {
        // max_a (HQ)(s,a) = T(max_a Q(·,a))(s), exactly.
        let mdp = two_state(0.7);
        let q = QTable::from_rows(vec![vec![1.0, -2.0], vec![0.25, 3.0]]);
        let hq = q_backup(&mdp, &q).unwrap();
        let tv = bellman_apply(&mdp, &q.greedy_values()).unwrap();
        assert_eq!(hq.greedy_values(), tv);
    }

    #[test]
    fn value_iteration_fixed_point_terminates_immediately() {
        let mdp = two_state(0.9);
        let (v, _) = value_iteration(&mdp, &[0.0, 0.0], 1e-10, 100_000).unwrap();
        let (v2, stats) = value_iteration(&mdp, &v, 1e-6, 100).unwrap();
        assert_eq!(stats.iterations, 1);
        assert!(linalg::sup_dist(&v, &v2) < 1e-9);
        assert!(stats.final_residual < 1e-9);
    }

    #[test]
    fn value_iteration_beta_zero_one_sweep() {
        let mdp = two_state(0.0);
        let (v, stats) = value_iteration(&mdp, &[9.0, 9.0], 1e-8, 10).unwrap();
        assert_eq!(stats.iterations, 1);
        assert!(stats.converged);
        assert_eq!(v, vec![1.0, 3.0]);
    }

    #[test]
    fn value_iteration_rejects_beta_one() {
        let mdp = FiniteMdp::new(1, 1, 1.0, vec![vec![0]], &[(0, 0, 0, 1.0, 1.0)]).unwrap();
        assert!(matches!(
            value_iteration(&mdp, &[0.0], 1e-8, 10),
            Err(Error::DiscountNotLessThanOne(_))
        ));
    }

    #[test]
    fn policy_evaluation_geometric_series() {
        // Single state, r = 1, β = 0.95  ⇒  V = 1/(1−β) = 20.
        let mdp = FiniteMdp::new(1, 1, 0.95, vec![vec![0]], &[(0, 0, 0, 1.0, 1.0)]).unwrap();
        let pi = StochasticPolicy::uniform(&mdp);
        let direct = policy_evaluation(&mdp, &pi, EvalMethod::Direct).unwrap();
        let iterative = policy_evaluation(&mdp, &pi, EvalMethod::Iterative).unwrap();
        assert!((direct[0] - 20.0).abs() < 1e-9);
        assert!((iterative[0] - 20.0).abs() < 1e-8);
    }

    #[test]
    fn policy_evaluation_zero_rewards() {
        let mdp = FiniteMdp::new(
            2,
            1,
            0.9,
            vec![vec![0], vec![0]],
            &[(0, 0, 1, 1.0, 0.0), (1, 0, 0, 1.0, 0.0)],
        )
        .unwrap();
        let pi = StochasticPolicy::uniform(&mdp);
        let v = policy_evaluation(&mdp, &pi, EvalMethod::Direct).unwrap();
        assert!(v.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn contraction_estimate_zero_discount() {
        let mdp = two_state(0.0);
        assert_eq!(contraction_estimate(&mdp, 50, 3).unwrap(), 0.0);
    }

    #[test]
    fn contraction_estimate_bounded_by_beta() {
        let mdp = two_state(0.95);
        let est = contraction_estimate(&mdp, 100, 7).unwrap();
        assert!(est <= 0.95 + 1e-12, "estimate {est} exceeds β");
    }

    #[test]
    fn contraction_attained_on_permutation_kernel() {
        // Deterministic cycle; f and g = f + e_s differ in one coordinate and
        // the difference propagates undamped, so the ratio is exactly β.
        let mdp = FiniteMdp::new(
            2,
            1,
            0.8,
            vec![vec![0], vec![0]],
            &[(0, 0, 1, 1.0, 0.0), (1, 0, 0, 1.0, 0.0)],
        )
        .unwrap();
        let f = vec![1.0, 2.0];
        let g = vec![1.0, 3.0];
        let tf = bellman_apply(&mdp, &f).unwrap();
        let tg = bellman_apply(&mdp, &g).unwrap();
        let ratio = linalg::sup_dist(&tf, &tg) / linalg::sup_dist(&f, &g);
        assert!((ratio - 0.8).abs() < 1e-12);
    }

    #[test]
    fn greedy_tie_break_lowest_index() {
        // Both actions identical: the lower index must win.
        let mdp = FiniteMdp::new(
            1,
            2,
            0.9,
            vec![vec![0, 1]],
            &[(0, 0, 0, 1.0, 1.0), (0, 1, 0, 1.0, 1.0)],
        )
        .unwrap();
        let pi = greedy_policy(&mdp, &[0.0]).unwrap();
        assert_eq!(pi.actions, vec![0]);
    }

    #[test]
    fn approximate_vi_zero_noise_decays() {
        let mdp = two_state(0.9);
        let dists = approximate_value_iteration(&mdp, &[0.0, 0.0], 0.0, 1, 300).unwrap();
        assert!(dists.last().unwrap() < &1e-8);
        // Geometric decay at rate ≤ β, checked above the rounding floor.
        for w in dists.windows(2) {
            if w[0] > 1e-10 {
                assert!(w[1] <= w[0] * 0.9 + 1e-12);
            }
        }
    }

    #[test]
    fn approximate_vi_bound_from_fixed_point_start() {
        let mdp = two_state(0.9);
        let (v, _) = value_iteration(&mdp, &[0.0, 0.0], 1e-10, 1_000_000).unwrap();
        let delta = 0.05;
        let dists = approximate_value_iteration(&mdp, &v, delta, 11, 500).unwrap();
        let bound = delta / (1.0 - 0.9);
        assert!(dists.iter().all(|&d| d <= bound + 1e-9));
    }

    #[test]
    fn enumeration_counts_products() {
        let mdp = two_state(0.9);
        assert_eq!(enumerate_deterministic_policies(&mdp).len(), 4);
    }
}
