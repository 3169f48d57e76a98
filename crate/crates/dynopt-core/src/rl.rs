//! Model-free tabular learning against a simulator: asynchronous Q-learning,
//! SARSA, linear-function-approximation Q-learning with periodically
//! refreshed target weights, and the standard exploration policies.
//!
//! Algorithms only ever see realized transitions `(s, a, s', R)` drawn from a
//! [`Simulator`]; transition probabilities stay on the other side of the
//! trait boundary.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mdp::{FiniteMdp, QTable};

/// Abort when a learned parameter leaves this region.
const DIVERGENCE_GUARD: f64 = 1e12;

/// Sampling access to an environment. Rewards are realized per transition;
/// the trait deliberately exposes no probabilities.
pub trait Simulator {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Feasible actions of `s`, sorted ascending.
    fn feasible(&self, s: usize) -> &[usize];
    fn initial_state(&self, rng: &mut ChaCha8Rng) -> usize;
    /// Samples one transition, returning the next state and realized reward.
    fn step(&self, s: usize, a: usize, rng: &mut ChaCha8Rng) -> (usize, f64);
    /// Episode termination predicate; continuing tasks keep the default.
    fn is_terminal(&self, _s: usize) -> bool {
        false
    }
}

/// How episodes start when a model is wrapped as a simulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialState {
    Fixed(usize),
    Uniform,
}

/// [`FiniteMdp`] wrapped as a sampling environment.
pub struct MdpSimulator<'a> {
    mdp: &'a FiniteMdp,
    initial: InitialState,
}

impl<'a> MdpSimulator<'a> {
    pub fn new(mdp: &'a FiniteMdp, initial: InitialState) -> Self {
        Self { mdp, initial }
    }
}

impl Simulator for MdpSimulator<'_> {
    fn n_states(&self) -> usize {
        self.mdp.n_states()
    }

    fn n_actions(&self) -> usize {
        self.mdp.n_actions()
    }

    fn feasible(&self, s: usize) -> &[usize] {
        self.mdp.feasible(s)
    }

    fn initial_state(&self, rng: &mut ChaCha8Rng) -> usize {
        match self.initial {
            InitialState::Fixed(s) => s,
            InitialState::Uniform => rng.gen_range(0..self.mdp.n_states()),
        }
    }

    fn step(&self, s: usize, a: usize, rng: &mut ChaCha8Rng) -> (usize, f64) {
        let arcs = self.mdp.arcs(s, a).expect("simulated action must be feasible");
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for t in arcs {
            acc += t.prob;
            if u < acc {
                return (t.next, t.reward);
            }
        }
        let last = arcs.last().expect("feasible pairs have transitions");
        (last.next, last.reward)
    }
}

/// Per-update step-size rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    /// γ(s,a) = c / (c + visits(s,a)), counted before the current update.
    VisitBased { c: f64 },
    /// Fixed α.
    Constant(f64),
}

impl LearningRate {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LearningRate::VisitBased { c } if !(c.is_finite() && c > 0.0) => Err(
                Error::InvalidParameter(format!("visit-based rate needs c > 0, got {c}")),
            ),
            LearningRate::Constant(a) if !(a.is_finite() && (0.0..=1.0).contains(&a)) => Err(
                Error::InvalidParameter(format!("constant rate must lie in [0,1], got {a}")),
            ),
            _ => Ok(()),
        }
    }

    fn gamma(&self, prior_visits: u64) -> f64 {
        match *self {
            LearningRate::VisitBased { c } => c / (c + prior_visits as f64),
            LearningRate::Constant(a) => a,
        }
    }
}

/// Behavior policy used to pick actions during learning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExplorationPolicy {
    /// Greedy with probability 1 − ε_t, uniform otherwise;
    /// ε_t = ε / (1 + decay · t).
    EpsilonGreedy { epsilon: f64, decay: f64 },
    /// Boltzmann sampling with temperature τ.
    Softmax { tau: f64 },
    /// Q(s,a) + c √(log t / N(s,a)), untried actions first.
    Ucb { c: f64 },
}

impl ExplorationPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ExplorationPolicy::EpsilonGreedy { epsilon, decay } => {
                if !((0.0..=1.0).contains(&epsilon) && decay >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "ε-greedy needs ε ∈ [0,1] and decay ≥ 0, got ε={epsilon}, decay={decay}"
                    )));
                }
            }
            ExplorationPolicy::Softmax { tau } => {
                if !(tau.is_finite() && tau > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "softmax needs τ > 0, got {tau}"
                    )));
                }
            }
            ExplorationPolicy::Ucb { c } => {
                if !(c.is_finite() && c >= 0.0) {
                    return Err(Error::InvalidParameter(format!("UCB needs c ≥ 0, got {c}")));
                }
            }
        }
        Ok(())
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}

/// Picks a position into the feasible row according to the exploration
/// policy. `q_row` and `counts` are aligned with the feasible set; `t` is the
/// global step index.
pub fn select_action(
    explore: &ExplorationPolicy,
    q_row: &[f64],
    counts: &[u64],
    t: u64,
    rng: &mut ChaCha8Rng,
) -> usize {
    debug_assert!(!q_row.is_empty());
    match *explore {
        ExplorationPolicy::EpsilonGreedy { epsilon, decay } => {
            let eps = epsilon / (1.0 + decay * t as f64);
            if eps > 0.0 && rng.gen::<f64>() < eps {
                rng.gen_range(0..q_row.len())
            } else {
                argmax(q_row)
            }
        }
        ExplorationPolicy::Softmax { tau } => {
            let top = q_row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = q_row.iter().map(|q| ((q - top) / tau).exp()).collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.gen::<f64>() * total;
            for (k, w) in weights.iter().enumerate() {
                u -= w;
                if u < 0.0 {
                    return k;
                }
            }
            q_row.len() - 1
        }
        ExplorationPolicy::Ucb { c } => {
            if let Some(k) = counts.iter().position(|&n| n == 0) {
                return k; // infinite bonus: try untried actions first
            }
            let log_t = (t.max(1) as f64).ln();
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for (k, (&q, &n)) in q_row.iter().zip(counts).enumerate() {
                let score = q + c * (log_t / n as f64).sqrt();
                if score > best_score {
                    best_score = score;
                    best = k;
                }
            }
            best
        }
    }
}

/// Learning-run bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct RlStats {
    pub total_steps: usize,
    pub episodes: usize,
    /// Visit counters per feasible pair, aligned with the feasible sets.
    pub visits: Vec<Vec<u64>>,
}

impl RlStats {
    pub fn min_visits(&self) -> u64 {
        self.visits
            .iter()
            .flat_map(|row| row.iter().copied())
            .min()
            .unwrap_or(0)
    }
}

fn guard(q: f64, what: &str) -> Result<()> {
    if !q.is_finite() || q.abs() > DIVERGENCE_GUARD {
        return Err(Error::NonFinite(format!("{what} diverged to {q}")));
    }
    Ok(())
}

fn check_discount(beta: f64) -> Result<()> {
    if !(beta.is_finite() && (0.0..1.0).contains(&beta)) {
        return Err(Error::DiscountNotLessThanOne(beta));
    }
    Ok(())
}

/// Asynchronous Q-learning: only the visited pair is updated each step,
/// toward `R + β max_ã Q(s', ã)`. Q-values persist across episode resets.
#[allow(clippy::too_many_arguments)]
pub fn q_learning(
    sim: &dyn Simulator,
    beta: f64,
    rate: &LearningRate,
    explore: &ExplorationPolicy,
    episodes: usize,
    steps_per_episode: usize,
    q_init: f64,
    seed: u64,
) -> Result<(QTable, RlStats)> {
    check_discount(beta)?;
    rate.validate()?;
    explore.validate()?;
    let n = sim.n_states();
    let mut q: Vec<Vec<f64>> = (0..n).map(|s| vec![q_init; sim.feasible(s).len()]).collect();
    let mut visits: Vec<Vec<u64>> = (0..n).map(|s| vec![0; sim.feasible(s).len()]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total_steps = 0usize;
    for _ in 0..episodes {
        let mut s = sim.initial_state(&mut rng);
        for _ in 0..steps_per_episode {
            let k = select_action(explore, &q[s], &visits[s], total_steps as u64, &mut rng);
            let a = sim.feasible(s)[k];
            let (next, reward) = sim.step(s, a, &mut rng);
            let target = reward
                + beta * q[next].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let gamma = rate.gamma(visits[s][k]);
            visits[s][k] += 1;
            q[s][k] += gamma * (target - q[s][k]);
            guard(q[s][k], "Q-learning")?;
            total_steps += 1;
            s = next;
            if sim.is_terminal(s) {
                break;
            }
        }
    }
    Ok((
        QTable::from_rows(q),
        RlStats {
            total_steps,
            episodes,
            visits,
        },
    ))
}

/// SARSA: on-policy bootstrap with the actually-selected next action,
/// `Q(s,a) ← Q(s,a) + γ(R + β Q(s',a') − Q(s,a))`.
#[allow(clippy::too_many_arguments)]
pub fn sarsa(
    sim: &dyn Simulator,
    beta: f64,
    rate: &LearningRate,
    explore: &ExplorationPolicy,
    episodes: usize,
    steps_per_episode: usize,
    q_init: f64,
    seed: u64,
) -> Result<(QTable, RlStats)> {
    check_discount(beta)?;
    rate.validate()?;
    explore.validate()?;
    let n = sim.n_states();
    let mut q: Vec<Vec<f64>> = (0..n).map(|s| vec![q_init; sim.feasible(s).len()]).collect();
    let mut visits: Vec<Vec<u64>> = (0..n).map(|s| vec![0; sim.feasible(s).len()]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total_steps = 0usize;
    for _ in 0..episodes {
        let mut s = sim.initial_state(&mut rng);
        let mut k = select_action(explore, &q[s], &visits[s], total_steps as u64, &mut rng);
        for _ in 0..steps_per_episode {
            let a = sim.feasible(s)[k];
            let (next, reward) = sim.step(s, a, &mut rng);
            let k_next = select_action(
                explore,
                &q[next],
                &visits[next],
                (total_steps + 1) as u64,
                &mut rng,
            );
            let target = reward + beta * q[next][k_next];
            let gamma = rate.gamma(visits[s][k]);
            visits[s][k] += 1;
            q[s][k] += gamma * (target - q[s][k]);
            guard(q[s][k], "SARSA")?;
            total_steps += 1;
            s = next;
            k = k_next;
            if sim.is_terminal(s) {
                break;
            }
        }
    }
    Ok((
        QTable::from_rows(q),
        RlStats {
            total_steps,
            episodes,
            visits,
        },
    ))
}

/// Linear Q-function `Q(s,a;θ) = θᵀφ(s,a)` with target weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearQ {
    pub theta: Vec<f64>,
    pub target_theta: Vec<f64>,
}

impl LinearQ {
    pub fn value(&self, phi: &[f64]) -> f64 {
        self.theta.iter().zip(phi).map(|(t, p)| t * p).sum()
    }

    fn target_value(&self, phi: &[f64]) -> f64 {
        self.target_theta.iter().zip(phi).map(|(t, p)| t * p).sum()
    }
}

/// Q-learning with linear function approximation:
/// `θ ← θ + γ δ φ(s,a)` with `δ = R + β max_{a'} θ⁻ᵀφ(s',a') − θᵀφ(s,a)`,
/// and θ⁻ ← θ at every `refresh` steps (so `refresh = 1` bootstraps from the
/// current weights, matching tabular Q-learning under one-hot features).
#[allow(clippy::too_many_arguments)]
pub fn q_learning_linear(
    sim: &dyn Simulator,
    features: &dyn Fn(usize, usize) -> Vec<f64>,
    dim: usize,
    beta: f64,
    rate: &LearningRate,
    explore: &ExplorationPolicy,
    refresh: usize,
    episodes: usize,
    steps_per_episode: usize,
    seed: u64,
) -> Result<(LinearQ, RlStats)> {
    check_discount(beta)?;
    rate.validate()?;
    explore.validate()?;
    if refresh == 0 {
        return Err(Error::InvalidParameter("refresh period must be ≥ 1".into()));
    }
    let n = sim.n_states();
    let mut lin = LinearQ {
        theta: vec![0.0; dim],
        target_theta: vec![0.0; dim],
    };
    let mut visits: Vec<Vec<u64>> = (0..n).map(|s| vec![0; sim.feasible(s).len()]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut total_steps = 0usize;
    for _ in 0..episodes {
        let mut s = sim.initial_state(&mut rng);
        for _ in 0..steps_per_episode {
            if total_steps % refresh == 0 {
                lin.target_theta.clone_from(&lin.theta);
            }
            let q_row: Vec<f64> = sim
                .feasible(s)
                .iter()
                .map(|&a| lin.value(&features(s, a)))
                .collect();
            let k = select_action(explore, &q_row, &visits[s], total_steps as u64, &mut rng);
            let a = sim.feasible(s)[k];
            let (next, reward) = sim.step(s, a, &mut rng);
            let best_next = sim
                .feasible(next)
                .iter()
                .map(|&a2| lin.target_value(&features(next, a2)))
                .fold(f64::NEG_INFINITY, f64::max);
            let phi = features(s, a);
            if phi.len() != dim {
                return Err(Error::DimensionMismatch(
                    "feature vector does not match the declared dimension".into(),
                ));
            }
            let delta = reward + beta * best_next - lin.value(&phi);
            let gamma = rate.gamma(visits[s][k]);
            visits[s][k] += 1;
            for (theta_j, phi_j) in lin.theta.iter_mut().zip(&phi) {
                *theta_j += gamma * delta * phi_j;
                guard(*theta_j, "linear Q-learning")?;
            }
            total_steps += 1;
            s = next;
            if sim.is_terminal(s) {
                break;
            }
        }
    }
    Ok((
        lin,
        RlStats {
            total_steps,
            episodes,
            visits,
        },
    ))
}

/// Sup-norm fixed-point residual ‖HQ − Q‖∞ of a learned table against the
/// model's exact Q-operator.
pub fn h_residual(mdp: &FiniteMdp, q: &QTable) -> Result<f64> {
    Ok(crate::mdp::q_backup(mdp, q)?.sup_dist(q))
}

/// One-hot tabular feature map over feasible pairs, for checking the linear
/// learner against the tabular one.
pub fn one_hot_features(mdp: &FiniteMdp) -> (impl Fn(usize, usize) -> Vec<f64> + '_, usize) {
    let mut offsets = vec![0usize; mdp.n_states()];
    let mut total = 0usize;
    for s in 0..mdp.n_states() {
        offsets[s] = total;
        total += mdp.feasible(s).len();
    }
    let map = move |s: usize, a: usize| -> Vec<f64> {
        let mut phi = vec![0.0; total];
        let k = mdp.action_pos(s, a).expect("feature map called on feasible pair");
        phi[offsets[s] + k] = 1.0;
        phi
    };
    (map, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::q_backup;

    fn one_state() -> FiniteMdp {
        FiniteMdp::new(1, 1, 0.5, vec![vec![0]], &[(0, 0, 0, 1.0, 1.0)]).unwrap()
    }

    /// Small stochastic benchmark with an exact Q* oracle.
    fn four_state() -> FiniteMdp {
        FiniteMdp::new(
            4,
            2,
            0.5,
            vec![vec![0, 1]; 4],
            &[
                (0, 0, 1, 0.7, 1.0),
                (0, 0, 2, 0.3, 0.0),
                (0, 1, 3, 1.0, -0.5),
                (1, 0, 0, 0.5, 2.0),
                (1, 0, 3, 0.5, 0.5),
                (1, 1, 2, 1.0, 1.5),
                (2, 0, 2, 0.6, -1.0),
                (2, 0, 0, 0.4, 3.0),
                (2, 1, 1, 1.0, 0.2),
                (3, 0, 3, 0.9, 0.4),
                (3, 0, 1, 0.1, 1.0),
                (3, 1, 0, 1.0, 0.0),
            ],
        )
        .unwrap()
    }

    fn q_star(mdp: &FiniteMdp) -> QTable {
        let mut q = QTable::zeros(mdp);
        loop {
            let next = q_backup(mdp, &q).unwrap();
            let d = next.sup_dist(&q);
            q = next;
            if d <= 1e-12 {
                return q;
            }
        }
    }

    #[test]
    fn geometric_limit_one_state() {
        let mdp = one_state();
        let sim = MdpSimulator::new(&mdp, InitialState::Fixed(0));
        let (q, _) = q_learning(
            &sim,
            0.5,
            &LearningRate::Constant(0.5),
            &ExplorationPolicy::EpsilonGreedy { epsilon: 0.0, decay: 0.0 },
            1,
            5_000,
            0.0,
            0,
        )
        .unwrap();
        assert!((q.rows()[0][0] - 2.0).abs() <= 1e-9);
    }

    #[test]
    fn q_learning_approaches_oracle_fixed_point() {
        let mdp = four_state();
        let sim = MdpSimulator::new(&mdp, InitialState::Uniform);
        let (q, stats) = q_learning(
            &sim,
            mdp.discount(),
            &LearningRate::VisitBased { c: 1.0 },
            &ExplorationPolicy::EpsilonGreedy { epsilon: 0.2, decay: 0.0 },
            1,
            200_000,
            0.0,
            17,
        )
        .unwrap();
        let exact = q_star(&mdp);
        assert!(q.sup_dist(&exact) <= 0.05, "gap = {}", q.sup_dist(&exact));
        assert!(stats.min_visits() > 100);
        // Fixed-point residual shrinks well below its Q=0 starting level.
        let initial = h_residual(&mdp, &QTable::zeros(&mdp)).unwrap();
        assert!(h_residual(&mdp, &q).unwrap() <= 0.1 * initial);
    }

    #[test]
    fn sarsa_matches_q_learning_when_greedy_on_deterministic_chain() {
        let mdp = FiniteMdp::new(
            2,
            1,
            0.8,
            vec![vec![0], vec![0]],
            &[(0, 0, 1, 1.0, 1.0), (1, 0, 0, 1.0, -1.0)],
        )
        .unwrap();
        let sim = MdpSimulator::new(&mdp, InitialState::Fixed(0));
        let explore = ExplorationPolicy::EpsilonGreedy { epsilon: 0.0, decay: 0.0 };
        let rate = LearningRate::VisitBased { c: 1.0 };
        let (q1, _) = q_learning(&sim, 0.8, &rate, &explore, 1, 1_000, 0.0, 5).unwrap();
        let (q2, _) = sarsa(&sim, 0.8, &rate, &explore, 1, 1_000, 0.0, 5).unwrap();
        assert_eq!(q1, q2);
    }

    #[test]
    fn sarsa_with_decaying_epsilon_learns_optimal_policy() {
        let mdp = four_state();
        let sim = MdpSimulator::new(&mdp, InitialState::Uniform);
        let (q, _) = sarsa(
            &sim,
            mdp.discount(),
            &LearningRate::VisitBased { c: 1.0 },
            &ExplorationPolicy::EpsilonGreedy { epsilon: 0.5, decay: 1e-4 },
            1,
            300_000,
            0.0,
            29,
        )
        .unwrap();
        let exact = q_star(&mdp);
        for s in 0..4 {
            assert_eq!(argmax(&q.rows()[s]), argmax(&exact.rows()[s]), "state {s}");
        }
    }

    #[test]
    fn one_hot_linear_equals_tabular_bit_for_bit() {
        let mdp = four_state();
        let sim = MdpSimulator::new(&mdp, InitialState::Uniform);
        let rate = LearningRate::VisitBased { c: 1.0 };
        let explore = ExplorationPolicy::EpsilonGreedy { epsilon: 0.2, decay: 0.0 };
        let (q, _) = q_learning(&sim, mdp.discount(), &rate, &explore, 1, 5_000, 0.0, 99).unwrap();
        let (phi, dim) = one_hot_features(&mdp);
        let (lin, _) = q_learning_linear(
            &sim,
            &phi,
            dim,
            mdp.discount(),
            &rate,
            &explore,
            1,
            1,
            5_000,
            99,
        )
        .unwrap();
        let mut j = 0;
        for s in 0..4 {
            for k in 0..mdp.feasible(s).len() {
                assert_eq!(lin.theta[j], q.rows()[s][k], "pair ({s},{k})");
                j += 1;
            }
        }
    }

    #[test]
    fn constant_feature_scalar_recursion() {
        // φ ≡ [1], one state, one action, constant α: θ follows the hand
        // recursion θ ← θ + α(1 + βθ⁻ − θ) with θ⁻ refreshed every step.
        let mdp = one_state();
        let sim = MdpSimulator::new(&mdp, InitialState::Fixed(0));
        let steps = 200;
        let alpha = 0.1;
        let (lin, _) = q_learning_linear(
            &sim,
            &|_, _| vec![1.0],
            1,
            0.5,
            &LearningRate::Constant(alpha),
            &ExplorationPolicy::EpsilonGreedy { epsilon: 0.0, decay: 0.0 },
            1,
            1,
            steps,
            0,
        )
        .unwrap();
        let mut theta = 0.0;
        for _ in 0..steps {
            theta += alpha * (1.0 + 0.5 * theta - theta);
        }
        assert_eq!(lin.theta[0], theta);
    }

    #[test]
    fn zero_rate_freezes_weights() {
        let mdp = one_state();
        let sim = MdpSimulator::new(&mdp, InitialState::Fixed(0));
        let (lin, _) = q_learning_linear(
            &sim,
            &|_, _| vec![1.0],
            1,
            0.5,
            &LearningRate::Constant(0.0),
            &ExplorationPolicy::EpsilonGreedy { epsilon: 0.0, decay: 0.0 },
            1,
            1,
            100,
            0,
        )
        .unwrap();
        assert_eq!(lin.theta, vec![0.0]);
    }

    #[test]
    fn greedy_selection_breaks_ties_low() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let explore = ExplorationPolicy::EpsilonGreedy { epsilon: 0.0, decay: 0.0 };
        assert_eq!(select_action(&explore, &[1.0, 1.0, 0.5], &[0, 0, 0], 0, &mut rng), 0);
    }

    #[test]
    fn ucb_tries_untried_action_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let explore = ExplorationPolicy::Ucb { c: 2.0 };
        assert_eq!(select_action(&explore, &[10.0, 0.0], &[5, 0], 100, &mut rng), 1);
    }

    #[test]
    fn softmax_symmetric_on_equal_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let explore = ExplorationPolicy::Softmax { tau: 1.0 };
        let mut first = 0usize;
        let draws = 10_000;
        for _ in 0..draws {
            if select_action(&explore, &[0.3, 0.3], &[0, 0], 0, &mut rng) == 0 {
                first += 1;
            }
        }
        let freq = first as f64 / draws as f64;
        assert!((freq - 0.5).abs() < 0.02, "freq = {freq}");
    }

    #[test]
    fn empirical_frequencies_match_model() {
        // Simulator wrapping a model reproduces p at coarse tolerance.
        let mdp = four_state();
        let sim = MdpSimulator::new(&mdp, InitialState::Fixed(0));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut hits = [0usize; 4];
        let draws = 50_000;
        for _ in 0..draws {
            let (next, _) = sim.step(0, 0, &mut rng);
            hits[next] += 1;
        }
        assert!((hits[1] as f64 / draws as f64 - 0.7).abs() < 0.01);
        assert!((hits[2] as f64 / draws as f64 - 0.3).abs() < 0.01);
    }
}
