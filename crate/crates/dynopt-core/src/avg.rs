//! Average-reward machinery: ergodicity of policy kernels, stationary
//! distributions, the average reward ρ(π), differential values and
//! advantages, exact and simulation-based policy gradients, and a Q-function
//! actor-critic.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::iter::StepSchedule;
use crate::linalg;
use crate::mdp::{
    policy_expected_rewards, policy_kernel_matrix, FiniteMdp, QTable, StochasticPolicy,
};
use crate::rl::Simulator;

/// Residual tolerance for stationary distributions and Poisson equations.
const SOLVE_TOL: f64 = 1e-10;

fn check_kernel(kernel: &[Vec<f64>]) -> Result<()> {
    let n = kernel.len();
    for (i, row) in kernel.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "kernel row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if row.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
            return Err(Error::InvalidModel(format!("kernel row {i} has a bad entry")));
        }
        let total: f64 = row.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidModel(format!(
                "kernel row {i} sums to {total}, not 1"
            )));
        }
    }
    Ok(())
}

/// Primitivity test: true iff some boolean power K^t (t ≤ (n−1)² + 1, the
/// Wielandt bound) is strictly positive, i.e. the chain is irreducible and
/// aperiodic.
pub fn ergodicity_check(kernel: &[Vec<f64>]) -> Result<bool> {
    check_kernel(kernel)?;
    let n = kernel.len();
    let adj: Vec<Vec<bool>> = kernel
        .iter()
        .map(|row| row.iter().map(|&p| p > 0.0).collect())
        .collect();
    let mut power = adj.clone();
    let bound = (n - 1) * (n - 1) + 1;
    for _ in 0..bound {
        if power.iter().all(|row| row.iter().all(|&b| b)) {
            return Ok(true);
        }
        let mut next = vec![vec![false; n]; n];
        for i in 0..n {
            for k in 0..n {
                if power[i][k] {
                    for j in 0..n {
                        if adj[k][j] {
                            next[i][j] = true;
                        }
                    }
                }
            }
        }
        power = next;
    }
    Ok(power.iter().all(|row| row.iter().all(|&b| b)))
}

/// Unique invariant distribution of an ergodic kernel, from λᵀ(K − I) = 0
/// with one equation replaced by the normalization Σλ = 1.
pub fn stationary_distribution(kernel: &[Vec<f64>]) -> Result<Vec<f64>> {
    if !ergodicity_check(kernel)? {
        return Err(Error::NotErgodic(
            "kernel is not irreducible and aperiodic".into(),
        ));
    }
    let n = kernel.len();
    // Rows of (Kᵀ − I)λ = 0, last row replaced by 1ᵀλ = 1.
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for i in 0..n - 1 {
        for j in 0..n {
            a[i][j] = kernel[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    a[n - 1] = vec![1.0; n];
    b[n - 1] = 1.0;
    let lambda = linalg::solve_dense(&a, &b)?;
    for (i, &l) in lambda.iter().enumerate() {
        if l < -SOLVE_TOL {
            return Err(Error::SingularSystem(format!(
                "stationary solve produced λ({i}) = {l} < 0"
            )));
        }
    }
    // Residual check ‖λᵀK − λᵀ‖∞.
    for j in 0..n {
        let image: f64 = (0..n).map(|i| lambda[i] * kernel[i][j]).sum();
        if (image - lambda[j]).abs() > SOLVE_TOL {
            return Err(Error::SingularSystem(
                "stationary distribution residual exceeds tolerance".into(),
            ));
        }
    }
    Ok(lambda)
}

/// ρ(π) = Σ_s Σ_a Σ_{s'} λ_π(s) π(s,a) p(s,a,s') R(s,a,s').
pub fn average_reward(mdp: &FiniteMdp, policy: &StochasticPolicy) -> Result<f64> {
    let kernel = policy_kernel_matrix(mdp, policy)?;
    let lambda = stationary_distribution(&kernel)?;
    let mut rho = 0.0;
    for s in 0..mdp.n_states() {
        for &a in mdp.feasible(s) {
            let pi = policy.probs[s][a];
            if pi == 0.0 {
                continue;
            }
            for t in mdp.arcs(s, a)? {
                rho += lambda[s] * pi * t.prob * t.reward;
            }
        }
    }
    Ok(rho)
}

/// Full average-reward solution of a fixed ergodic policy.
#[derive(Debug, Clone, PartialEq)]
pub struct AvgRewardSolution {
    pub rho: f64,
    pub lambda: Vec<f64>,
    /// Differential values with h(s₀) = 0.
    pub h: Vec<f64>,
    /// Q_π(s,a) = Σ_{s'} p(s,a,s')(R(s,a,s') − ρ + h(s')).
    pub q: QTable,
    /// A_π = Q_π − h_π.
    pub advantage: QTable,
}

/// Solves the Poisson equation (I − K_π)h = r_π − ρ·1 with h(s₀) = 0, then
/// derives Q_π and the advantages.
pub fn differential_values(
    mdp: &FiniteMdp,
    policy: &StochasticPolicy,
    s0: usize,
) -> Result<AvgRewardSolution> {
    if s0 >= mdp.n_states() {
        return Err(Error::InvalidParameter(format!(
            "reference state {s0} out of range"
        )));
    }
    let kernel = policy_kernel_matrix(mdp, policy)?;
    let lambda = stationary_distribution(&kernel)?;
    let r_pi = policy_expected_rewards(mdp, policy)?;
    let rho: f64 = lambda.iter().zip(&r_pi).map(|(l, r)| l * r).sum();

    let n = mdp.n_states();
    // (I − K)h = r_π − ρ1, with row s₀ replaced by h(s₀) = 0.
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for i in 0..n {
        if i == s0 {
            a[i][s0] = 1.0;
            continue;
        }
        for j in 0..n {
            a[i][j] = (if i == j { 1.0 } else { 0.0 }) - kernel[i][j];
        }
        b[i] = r_pi[i] - rho;
    }
    let h = linalg::solve_dense(&a, &b)?;
    // Poisson residual: h + ρ1 = r_π + K h.
    for i in 0..n {
        let rhs: f64 = r_pi[i] + (0..n).map(|j| kernel[i][j] * h[j]).sum::<f64>();
        if (h[i] + rho - rhs).abs() > SOLVE_TOL {
            return Err(Error::SingularSystem(
                "Poisson equation residual exceeds tolerance".into(),
            ));
        }
    }

    let mut q_rows = Vec::with_capacity(n);
    let mut a_rows = Vec::with_capacity(n);
    for s in 0..n {
        let mut q_row = Vec::with_capacity(mdp.feasible(s).len());
        for &act in mdp.feasible(s) {
            let mut q = 0.0;
            for t in mdp.arcs(s, act)? {
                q += t.prob * (t.reward - rho + h[t.next]);
            }
            q_row.push(q);
        }
        a_rows.push(q_row.iter().map(|q| q - h[s]).collect());
        q_rows.push(q_row);
    }
    Ok(AvgRewardSolution {
        rho,
        lambda,
        h,
        q: QTable::from_rows(q_rows),
        advantage: QTable::from_rows(a_rows),
    })
}

/// Exact gradient of ρ under the direct tabular parameterization:
/// g(s,a) = λ_π(s) Q_π(s,a) over feasible pairs.
pub fn policy_gradient_exact(mdp: &FiniteMdp, policy: &StochasticPolicy) -> Result<QTable> {
    let sol = differential_values(mdp, policy, 0)?;
    let rows = sol
        .q
        .rows()
        .iter()
        .enumerate()
        .map(|(s, row)| row.iter().map(|q| sol.lambda[s] * q).collect())
        .collect();
    Ok(QTable::from_rows(rows))
}

/// Euclidean projection of one real vector onto the probability simplex via
/// the sort-and-threshold rule.
pub fn simplex_project_row(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).expect("finite entries"));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        acc += u;
        let candidate = (acc - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&u| (u - theta).max(0.0)).collect()
}

/// Per-state simplex projection of unconstrained rows (aligned with the
/// feasible sets) into a valid stochastic policy.
pub fn simplex_project(mdp: &FiniteMdp, rows: &[Vec<f64>]) -> Result<StochasticPolicy> {
    if rows.len() != mdp.n_states() {
        return Err(Error::DimensionMismatch(
            "one row per state required".into(),
        ));
    }
    let mut probs = vec![vec![0.0; mdp.n_actions()]; mdp.n_states()];
    for (s, row) in rows.iter().enumerate() {
        let acts = mdp.feasible(s);
        if row.len() != acts.len() {
            return Err(Error::DimensionMismatch(format!(
                "row {s} does not match the feasible set"
            )));
        }
        let projected = simplex_project_row(row);
        for (k, &a) in acts.iter().enumerate() {
            probs[s][a] = projected[k];
        }
    }
    StochasticPolicy::new(mdp, probs)
}

/// Projected policy gradient ascent π_{k+1} = P_Δ(π_k + α g(π_k)) with the
/// exact gradient. Returns the final policy and the recorded ρ trajectory.
pub fn projected_policy_gradient(
    mdp: &FiniteMdp,
    pi0: &StochasticPolicy,
    alpha: f64,
    iters: usize,
) -> Result<(StochasticPolicy, Vec<f64>)> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step size must be non-negative, got {alpha}"
        )));
    }
    let mut pi = pi0.clone();
    let mut rho_trajectory = vec![average_reward(mdp, &pi)?];
    for _ in 0..iters {
        let g = policy_gradient_exact(mdp, &pi)?;
        let rows: Vec<Vec<f64>> = (0..mdp.n_states())
            .map(|s| {
                mdp.feasible(s)
                    .iter()
                    .enumerate()
                    .map(|(k, &a)| pi.probs[s][a] + alpha * g.rows()[s][k])
                    .collect()
            })
            .collect();
        let next = simplex_project(mdp, &rows)?;
        let moved = next
            .probs
            .iter()
            .flatten()
            .zip(pi.probs.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        pi = next;
        rho_trajectory.push(average_reward(mdp, &pi)?);
        if moved <= 1e-10 {
            break;
        }
    }
    Ok((pi, rho_trajectory))
}

/// Both sides of the performance-difference identity
/// ρ(π') − ρ(π) = Σ_s λ_{π'}(s) Σ_a π'(s,a) A_π(s,a).
pub fn performance_difference(
    mdp: &FiniteMdp,
    pi: &StochasticPolicy,
    pi_prime: &StochasticPolicy,
) -> Result<(f64, f64)> {
    let base = differential_values(mdp, pi, 0)?;
    let prime = differential_values(mdp, pi_prime, 0)?;
    let lhs = prime.rho - base.rho;
    let mut rhs = 0.0;
    for s in 0..mdp.n_states() {
        for (k, &a) in mdp.feasible(s).iter().enumerate() {
            rhs += prime.lambda[s] * pi_prime.probs[s][a] * base.advantage.rows()[s][k];
        }
    }
    Ok((lhs, rhs))
}

/// Tabular softmax policy π_θ(s,a) ∝ exp(θ(s,a)), parameters aligned with
/// the feasible sets.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxPolicy {
    pub theta: Vec<Vec<f64>>,
}

impl SoftmaxPolicy {
    /// Zero parameters (uniform policy) for the given feasible-set sizes.
    pub fn zeros(row_sizes: &[usize]) -> Self {
        Self {
            theta: row_sizes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    /// Probabilities over the feasible set of `s`.
    pub fn probs_row(&self, s: usize) -> Vec<f64> {
        let row = &self.theta[s];
        let top = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = row.iter().map(|t| (t - top).exp()).collect();
        let total: f64 = weights.iter().sum();
        weights.into_iter().map(|w| w / total).collect()
    }

    /// Samples a feasible-set position.
    pub fn sample(&self, s: usize, rng: &mut ChaCha8Rng) -> usize {
        let probs = self.probs_row(s);
        let mut u = rng.gen::<f64>();
        for (k, p) in probs.iter().enumerate() {
            u -= p;
            if u < 0.0 {
                return k;
            }
        }
        probs.len() - 1
    }

    /// Full stochastic-policy representation on a model with matching
    /// feasible sets.
    pub fn to_stochastic(&self, mdp: &FiniteMdp) -> Result<StochasticPolicy> {
        let mut probs = vec![vec![0.0; mdp.n_actions()]; mdp.n_states()];
        for s in 0..mdp.n_states() {
            let row = self.probs_row(s);
            for (k, &a) in mdp.feasible(s).iter().enumerate() {
                probs[s][a] = row[k];
            }
        }
        StochasticPolicy::new(mdp, probs)
    }
}

/// Single-trajectory REINFORCE estimate of ∂ρ/∂θ for a tabular softmax
/// policy: run H+1 steps, set ρ̄ = Σ R_k / H, build G_t = R_t + G_{t+1} − ρ̄
/// backwards from G_{H+1} = 0, and accumulate ∇log π_θ(s_t,a_t)·(G_t − b(s_t))
/// with an optional state baseline b.
///
/// The accumulated sum is divided by the number of sampled pairs (H + 1), so
/// the estimate is a per-step Monte Carlo average whose mean approaches
/// ∂ρ/∂θ as H grows; the un-normalized sum only rescales the gradient-ascent
/// learning rate.
///
/// ρ̄ is measured on a separate rollout of the same policy rather than the
/// gradient trajectory itself. Reusing one trajectory for both correlates ρ̄
/// with the score functions and shrinks the estimator's mean by a factor
/// approaching 1/2; since the score ∇log π_θ(s_t,·) has conditional mean
/// zero, an independent ρ̄ leaves the estimate unbiased up to truncation.
pub fn reinforce_gradient_estimate(
    sim: &dyn Simulator,
    policy: &SoftmaxPolicy,
    horizon: usize,
    baseline: Option<&[f64]>,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if horizon == 0 {
        return Err(Error::InvalidParameter("horizon must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rollout = |rng: &mut ChaCha8Rng| -> Result<(Vec<usize>, Vec<usize>, Vec<f64>)> {
        let mut s = sim.initial_state(rng);
        let mut states = Vec::with_capacity(horizon + 1);
        let mut actions = Vec::with_capacity(horizon + 1);
        let mut rewards = Vec::with_capacity(horizon + 1);
        for _ in 0..=horizon {
            let k = policy.sample(s, rng);
            let a = sim.feasible(s)[k];
            let (next, reward) = sim.step(s, a, rng);
            if !reward.is_finite() {
                return Err(Error::NonFinite(
                    "simulator returned a non-finite reward".into(),
                ));
            }
            states.push(s);
            actions.push(k);
            rewards.push(reward);
            s = next;
        }
        Ok((states, actions, rewards))
    };
    let (_, _, aux_rewards) = rollout(&mut rng)?;
    let rho_bar: f64 = aux_rewards.iter().sum::<f64>() / horizon as f64;
    let (states, actions, rewards) = rollout(&mut rng)?;
    let mut grad: Vec<Vec<f64>> = policy.theta.iter().map(|row| vec![0.0; row.len()]).collect();
    let mut g_next = 0.0;
    for t in (0..=horizon).rev() {
        let g_t = rewards[t] + g_next - rho_bar;
        g_next = g_t;
        let s_t = states[t];
        let k_t = actions[t];
        let advantage = g_t - baseline.map_or(0.0, |b| b[s_t]);
        let probs = policy.probs_row(s_t);
        for (k, p) in probs.iter().enumerate() {
            let indicator = if k == k_t { 1.0 } else { 0.0 };
            grad[s_t][k] += (indicator - p) * advantage;
        }
    }
    let norm = (horizon + 1) as f64;
    for row in &mut grad {
        for g in row {
            *g /= norm;
        }
    }
    Ok(grad)
}

/// Q-function actor-critic with linear critic features and a tabular softmax
/// actor. Per step: act, observe (s', R), sample a' ~ π_θ(s'), form
/// δ = R − ρ + Q(s',a';w) − Q(s,a;w), update the critic w ← w + γδφ(s,a),
/// the actor θ ← θ + α∇log π_θ(s,a)·Q(s,a;w) (pre-update w), and the
/// average-reward tracker ρ ← (1−ε)ρ + εR.
#[allow(clippy::too_many_arguments)]
pub fn actor_critic(
    sim: &dyn Simulator,
    theta0: &SoftmaxPolicy,
    w0: &[f64],
    features: &dyn Fn(usize, usize) -> Vec<f64>,
    critic_rate: &StepSchedule,
    actor_rate: &StepSchedule,
    rho_rate: &StepSchedule,
    steps: usize,
    seed: u64,
) -> Result<(SoftmaxPolicy, Vec<f64>, Vec<f64>)> {
    critic_rate.validate()?;
    actor_rate.validate()?;
    rho_rate.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = theta0.clone();
    let mut w = w0.to_vec();
    let mut rho = 0.0;
    let mut rho_trajectory = Vec::with_capacity(steps);
    let q_of = |w: &[f64], phi: &[f64]| -> f64 { w.iter().zip(phi).map(|(a, b)| a * b).sum() };

    let mut s = sim.initial_state(&mut rng);
    let mut k = theta.sample(s, &mut rng);
    for t in 0..steps {
        let a = sim.feasible(s)[k];
        let (next, reward) = sim.step(s, a, &mut rng);
        let k_next = theta.sample(next, &mut rng);
        let a_next = sim.feasible(next)[k_next];
        let phi_sa = features(s, a);
        let phi_next = features(next, a_next);
        let q_sa = q_of(&w, &phi_sa);
        let delta = reward - rho + q_of(&w, &phi_next) - q_sa;

        let gamma = critic_rate.gamma(t);
        for (wj, pj) in w.iter_mut().zip(&phi_sa) {
            *wj += gamma * delta * pj;
            if !wj.is_finite() || wj.abs() > 1e12 {
                return Err(Error::NonFinite("actor-critic critic weights diverged".into()));
            }
        }

        let alpha = actor_rate.gamma(t);
        if alpha > 0.0 {
            let probs = theta.probs_row(s);
            for (j, p) in probs.iter().enumerate() {
                let indicator = if j == k { 1.0 } else { 0.0 };
                theta.theta[s][j] += alpha * (indicator - p) * q_sa;
                if !theta.theta[s][j].is_finite() {
                    return Err(Error::NonFinite("actor-critic actor weights diverged".into()));
                }
            }
        }

        let eps = rho_rate.gamma(t);
        rho = (1.0 - eps) * rho + eps * reward;
        rho_trajectory.push(rho);
        s = next;
        k = k_next;
    }
    Ok((theta, w, rho_trajectory))
}
