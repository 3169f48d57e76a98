//! Parameterized builders for the benchmark models: inventory control,
//! house sale, grid world, rideshare matching, Bayesian bandits, a
//! consumption-savings problem, and the 100-state aggregation example.
//!
//! Builders are deterministic; stochastic behavior appears only through
//! simulator views of the produced models.

use std::collections::HashMap;

use crate::agg::AggregationMap;
use crate::error::{Error, Result};
use crate::mdp::FiniteMdp;
use crate::structure::OrderedModel;

fn merge_push(
    transitions: &mut Vec<(usize, usize, usize, f64, f64)>,
    key: &mut HashMap<(usize, usize, usize), usize>,
    s: usize,
    a: usize,
    next: usize,
    prob: f64,
    reward: f64,
) {
    if let Some(&i) = key.get(&(s, a, next)) {
        // Same realized reward required to merge; callers guarantee it.
        debug_assert!((transitions[i].4 - reward).abs() < 1e-12);
        transitions[i].3 += prob;
    } else {
        key.insert((s, a, next), transitions.len());
        transitions.push((s, a, next, prob, reward));
    }
}

/// Inventory control with order-up-to actions: states and actions 0..=ā,
/// Γ(s) = [s, ā], reward `w·E[min(a,D)] − c(a−s) − h·E[(a−D)⁺]`, transition
/// `s' = max(a − D, 0)`. `demand[d]` is P(D = d) on {0..=ā}.
pub fn build_inventory(
    a_bar: usize,
    w: f64,
    h: f64,
    c: f64,
    beta: f64,
    demand: &[f64],
) -> Result<OrderedModel> {
    if a_bar < 1 {
        return Err(Error::InvalidParameter("need ā ≥ 1".into()));
    }
    if demand.len() != a_bar + 1 {
        return Err(Error::InvalidParameter(format!(
            "demand must be given on 0..={a_bar}"
        )));
    }
    let total: f64 = demand.iter().sum();
    if (total - 1.0).abs() > 1e-12 || demand.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
        return Err(Error::InvalidModel("demand is not a distribution".into()));
    }
    let n = a_bar + 1;
    let feasible: Vec<Vec<usize>> = (0..n).map(|s| (s..n).collect()).collect();
    let mut transitions = Vec::new();
    let mut key = HashMap::new();
    for s in 0..n {
        for a in s..n {
            let order_cost = c * (a - s) as f64;
            for (d, &p) in demand.iter().enumerate() {
                if p == 0.0 {
                    continue;
                }
                let (next, reward) = if d < a {
                    // Unsold stock a − d carries over and is charged holding.
                    (a - d, w * d as f64 - order_cost - h * (a - d) as f64)
                } else {
                    // Demand clears the shelf; every d ≥ a yields the same
                    // realized reward, so the merged arc stays well defined.
                    (0, w * a as f64 - order_cost)
                };
                merge_push(&mut transitions, &mut key, s, a, next, p, reward);
            }
        }
    }
    let mdp = FiniteMdp::new(n, n, beta, feasible, &transitions)?;
    let state_coords = (0..n).map(|s| vec![s as i64]).collect();
    let action_coords = (0..n).map(|a| vec![a as i64]).collect();
    OrderedModel::new(mdp, state_coords, action_coords)
}

/// Default inventory parameters: ā = 7, w = 2, h = c = 1, β = 0.95, demand
/// uniform on {1..7}.
pub fn build_inventory_default() -> Result<OrderedModel> {
    let mut demand = vec![1.0 / 7.0; 8];
    demand[0] = 0.0;
    build_inventory(7, 2.0, 1.0, 1.0, 0.95, &demand)
}

/// House-sale stopping problem: states 0..n−1 hold offers r[i]; state n is
/// the absorbing sold state. Action 0 rejects (offer evolves by `p`),
/// action 1 accepts and collects r[i].
pub fn build_house_sale(beta: f64, r: &[f64], p: &[Vec<f64>]) -> Result<FiniteMdp> {
    let n = r.len();
    if n == 0 || p.len() != n {
        return Err(Error::DimensionMismatch(
            "need one kernel row per offer level".into(),
        ));
    }
    let sold = n;
    let mut feasible: Vec<Vec<usize>> = (0..n).map(|_| vec![0, 1]).collect();
    feasible.push(vec![0]);
    let mut transitions = Vec::new();
    for (i, row) in p.iter().enumerate() {
        if row.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "kernel row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        for (j, &prob) in row.iter().enumerate() {
            if prob > 0.0 {
                transitions.push((i, 0, j, prob, 0.0));
            }
        }
        transitions.push((i, 1, sold, 1.0, r[i]));
    }
    transitions.push((sold, 0, sold, 1.0, 0.0));
    FiniteMdp::new(n + 1, 2, beta, feasible, &transitions)
}

/// The tridiagonal offer kernel used by the benchmark: the lowest offer moves
/// up with probability 2/3 and stays with 1/3, interior offers move to each
/// neighbor or stay with probability 1/3, and the highest offer mirrors the
/// lowest.
pub fn house_sale_default_kernel(n: usize) -> Vec<Vec<f64>> {
    let mut p = vec![vec![0.0; n]; n];
    p[0][0] = 1.0 / 3.0;
    p[0][1] = 2.0 / 3.0;
    for i in 1..n - 1 {
        p[i][i - 1] = 1.0 / 3.0;
        p[i][i] = 1.0 / 3.0;
        p[i][i + 1] = 1.0 / 3.0;
    }
    p[n - 1][n - 2] = 2.0 / 3.0;
    p[n - 1][n - 1] = 1.0 / 3.0;
    p
}

/// Offer values 1..=n.
pub fn house_sale_default_rewards(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64).collect()
}

/// Grid-world navigation: `size × size` cells indexed `row·size + col`,
/// actions 0=up, 1=down, 2=left, 3=right, deterministic moves with off-grid
/// moves leaving the position unchanged. The reward is earned on the cell
/// entered: `goal_reward` at the target, `obstacle_reward` on an obstacle,
/// `step_reward` otherwise; the target is not absorbing.
pub fn build_gridworld(
    size: usize,
    target: (usize, usize),
    obstacles: &[(usize, usize)],
    goal_reward: f64,
    obstacle_reward: f64,
    step_reward: f64,
    beta: f64,
) -> Result<FiniteMdp> {
    if size < 2 {
        return Err(Error::InvalidParameter("grid needs size ≥ 2".into()));
    }
    for &(r, c) in obstacles.iter().chain(std::iter::once(&target)) {
        if r >= size || c >= size {
            return Err(Error::InvalidParameter(format!(
                "cell ({r},{c}) lies outside the {size}×{size} grid"
            )));
        }
    }
    let n = size * size;
    let cell_reward = |r: usize, c: usize| -> f64 {
        if (r, c) == target {
            goal_reward
        } else if obstacles.contains(&(r, c)) {
            obstacle_reward
        } else {
            step_reward
        }
    };
    let mut transitions = Vec::new();
    for r in 0..size {
        for c in 0..size {
            let s = r * size + c;
            let moves = [
                (r.wrapping_sub(1), c), // up
                (r + 1, c),             // down
                (r, c.wrapping_sub(1)), // left
                (r, c + 1),             // right
            ];
            for (a, &(nr, nc)) in moves.iter().enumerate() {
                let (nr, nc) = if nr < size && nc < size { (nr, nc) } else { (r, c) };
                transitions.push((s, a, nr * size + nc, 1.0, cell_reward(nr, nc)));
            }
        }
    }
    FiniteMdp::new(n, 4, beta, vec![vec![0, 1, 2, 3]; n], &transitions)
}

/// Benchmark grid world: 8×8, target (3,7), six obstacles, rewards
/// 10 / −1 / −0.1, β = 0.99.
pub fn build_gridworld_default() -> Result<FiniteMdp> {
    build_gridworld(
        8,
        (3, 7),
        &GRIDWORLD_OBSTACLES,
        10.0,
        -1.0,
        -0.1,
        0.99,
    )
}

/// Obstacle cells of the benchmark grid world.
pub const GRIDWORLD_OBSTACLES: [(usize, usize); 6] =
    [(1, 2), (1, 3), (3, 1), (3, 2), (3, 6), (6, 6)];

/// Rideshare matching: state bits (d₁,d₂,r₁,r₂) encoded as
/// `(d₁<<3)|(d₂<<2)|(r₁<<1)|r₂`; actions 0..3 match driver i with request j
/// (feasible iff both present), action 4 matches both pairs (feasible only in
/// state 1111), action 5 declines (always feasible). Matched and absent
/// components reappear independently with `reappear` = (p_d₁, p_d₂, p_r₁, p_r₂).
pub fn build_rideshare(
    match_rewards: [f64; 4],
    both_reward: f64,
    reappear: [f64; 4],
    beta: f64,
) -> Result<FiniteMdp> {
    if reappear.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::InvalidParameter(
            "reappearance probabilities must lie in [0,1]".into(),
        ));
    }
    let bit = |s: usize, i: usize| -> bool { s >> (3 - i) & 1 == 1 };
    // Match actions consume (driver, request) component pairs.
    let pairs = [(0, 2), (0, 3), (1, 2), (1, 3)];
    let mut feasible = Vec::with_capacity(16);
    let mut transitions = Vec::new();
    let mut key = HashMap::new();
    for s in 0..16usize {
        let mut acts = Vec::new();
        for (a, &(d, r)) in pairs.iter().enumerate() {
            if bit(s, d) && bit(s, r) {
                acts.push(a);
            }
        }
        if s == 0b1111 {
            acts.push(4);
        }
        acts.push(5);
        for &a in &acts {
            let consumed: Vec<usize> = match a {
                0..=3 => vec![pairs[a].0, pairs[a].1],
                4 => vec![0, 1, 2, 3],
                _ => vec![],
            };
            let reward = match a {
                0..=3 => match_rewards[a],
                4 => both_reward,
                _ => 0.0,
            };
            let mut after = s;
            for &i in &consumed {
                after &= !(1 << (3 - i));
            }
            // Absent components (after matching) reappear independently.
            let absent: Vec<usize> = (0..4).filter(|&i| !bit(after, i)).collect();
            for mask in 0..(1usize << absent.len()) {
                let mut next = after;
                let mut prob = 1.0;
                for (b, &i) in absent.iter().enumerate() {
                    if mask >> b & 1 == 1 {
                        next |= 1 << (3 - i);
                        prob *= reappear[i];
                    } else {
                        prob *= 1.0 - reappear[i];
                    }
                }
                if prob > 0.0 {
                    merge_push(&mut transitions, &mut key, s, a, next, prob, reward);
                }
            }
        }
        feasible.push(acts);
    }
    FiniteMdp::new(16, 6, beta, feasible, &transitions)
}

/// Benchmark rideshare: match rewards (3, 2, 4, 3), both-reward 10,
/// reappearance (0.5, 0.6, 0.45, 0.7), β = 0.99.
pub fn build_rideshare_default(both_reward: f64) -> Result<FiniteMdp> {
    build_rideshare([3.0, 2.0, 4.0, 3.0], both_reward, [0.5, 0.6, 0.45, 0.7], 0.99)
}

/// Bayesian Bernoulli bandit, truncated at `budget` pulls. States are the
/// reachable posterior tuples (α_i, β_i); pulling arm `i` pays 1 with
/// probability α_i/(α_i+β_i) (posterior → (α_i+1, β_i)) and 0 otherwise
/// (posterior → (α_i, β_i+1)). At the truncation depth the model collapses
/// to pulling the myopically best arm forever without further learning.
pub fn build_bandit_bayes(
    priors: &[(u32, u32)],
    budget: usize,
    beta: f64,
) -> Result<FiniteMdp> {
    let k = priors.len();
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one arm".into()));
    }
    if priors.iter().any(|&(a, b)| a == 0 || b == 0) {
        return Err(Error::InvalidParameter(
            "prior parameters must be positive".into(),
        ));
    }
    // Breadth-first enumeration of reachable posteriors up to the budget.
    let root: Vec<(u32, u32)> = priors.to_vec();
    let mut index: HashMap<Vec<(u32, u32)>, usize> = HashMap::new();
    let mut states = vec![root.clone()];
    index.insert(root, 0);
    let mut frontier = vec![0usize];
    for _ in 0..budget {
        let mut next_frontier = Vec::new();
        for &si in &frontier {
            let tuple = states[si].clone();
            for arm in 0..k {
                for success in [true, false] {
                    let mut child = tuple.clone();
                    if success {
                        child[arm].0 += 1;
                    } else {
                        child[arm].1 += 1;
                    }
                    if !index.contains_key(&child) {
                        index.insert(child.clone(), states.len());
                        next_frontier.push(states.len());
                        states.push(child);
                    }
                }
            }
        }
        frontier = next_frontier;
    }
    let depth_of = |t: &[(u32, u32)]| -> usize {
        t.iter()
            .zip(priors)
            .map(|(&(a, b), &(a0, b0))| (a + b - a0 - b0) as usize)
            .sum()
    };
    let mean = |(a, b): (u32, u32)| -> f64 { a as f64 / (a + b) as f64 };
    let mut feasible = Vec::with_capacity(states.len());
    let mut transitions = Vec::new();
    for (si, tuple) in states.iter().enumerate() {
        if depth_of(tuple) >= budget {
            // Truncation: repeat the myopically best arm, no learning.
            let best = (0..k)
                .max_by(|&a, &b| mean(tuple[a]).partial_cmp(&mean(tuple[b])).unwrap())
                .unwrap();
            let best = (0..k)
                .find(|&a| mean(tuple[a]) == mean(tuple[best]))
                .unwrap(); // lowest index on ties
            feasible.push(vec![best]);
            transitions.push((si, best, si, 1.0, mean(tuple[best])));
            continue;
        }
        feasible.push((0..k).collect());
        for arm in 0..k {
            let p = mean(tuple[arm]);
            let mut up = tuple.clone();
            up[arm].0 += 1;
            let mut down = tuple.clone();
            down[arm].1 += 1;
            transitions.push((si, arm, index[&up], p, 1.0));
            transitions.push((si, arm, index[&down], 1.0 - p, 0.0));
        }
    }
    FiniteMdp::new(states.len(), k, beta, feasible, &transitions)
}

/// Consumption-savings on a wealth × income grid. States are pairs
/// (wealth index, income index); actions are savings levels on a uniform
/// grid over [0, wealth_max], feasible when a ≤ wealth; reward u(wealth − a);
/// next wealth `R·a + y` snapped down to the wealth grid while income moves
/// by the kernel `q` and the gross return is drawn from `returns`.
#[allow(clippy::too_many_arguments)]
pub fn build_consumption_savings(
    n_wealth: usize,
    wealth_max: f64,
    n_savings: usize,
    incomes: &[f64],
    q: &[Vec<f64>],
    returns: &[(f64, f64)],
    beta: f64,
    utility: &dyn Fn(f64) -> f64,
) -> Result<OrderedModel> {
    if n_wealth < 2 || n_savings < 2 {
        return Err(Error::InvalidParameter(
            "need at least two wealth and two savings grid points".into(),
        ));
    }
    let m = incomes.len();
    if m == 0 || q.len() != m || q.iter().any(|row| row.len() != m) {
        return Err(Error::DimensionMismatch(
            "income kernel must be square over the income grid".into(),
        ));
    }
    let ret_total: f64 = returns.iter().map(|&(_, p)| p).sum();
    if returns.is_empty() || (ret_total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidModel(
            "return distribution must sum to 1".into(),
        ));
    }
    let wealth_grid: Vec<f64> = (0..n_wealth)
        .map(|i| wealth_max * i as f64 / (n_wealth - 1) as f64)
        .collect();
    let savings_grid: Vec<f64> = (0..n_savings)
        .map(|i| wealth_max * i as f64 / (n_savings - 1) as f64)
        .collect();
    // Largest grid point ≤ the computed wealth (floor snapping).
    let snap = |wealth: f64| -> usize {
        let mut idx = 0;
        for (i, &g) in wealth_grid.iter().enumerate() {
            if g <= wealth + 1e-12 {
                idx = i;
            }
        }
        idx
    };
    let state_of = |wi: usize, yi: usize| wi * m + yi;
    let n_states = n_wealth * m;
    let mut feasible = vec![Vec::new(); n_states];
    let mut transitions = Vec::new();
    let mut key = HashMap::new();
    for wi in 0..n_wealth {
        for yi in 0..m {
            let s = state_of(wi, yi);
            for (ai, &a) in savings_grid.iter().enumerate() {
                if a > wealth_grid[wi] + 1e-12 {
                    break;
                }
                feasible[s].push(ai);
                let reward = utility((wealth_grid[wi] - a).max(0.0));
                for &(r_gross, p_r) in returns {
                    for yj in 0..m {
                        let p = p_r * q[yi][yj];
                        if p == 0.0 {
                            continue;
                        }
                        let w_next = snap(r_gross * a + incomes[yi]);
                        merge_push(
                            &mut transitions,
                            &mut key,
                            s,
                            ai,
                            state_of(w_next, yj),
                            p,
                            reward,
                        );
                    }
                }
            }
        }
    }
    let mdp = FiniteMdp::new(n_states, n_savings, beta, feasible, &transitions)?;
    let mut state_coords = Vec::with_capacity(n_states);
    for wi in 0..n_wealth {
        for yi in 0..m {
            state_coords.push(vec![wi as i64, yi as i64]);
        }
    }
    let action_coords = (0..n_savings).map(|a| vec![a as i64]).collect();
    OrderedModel::new(mdp, state_coords, action_coords)
}

/// Benchmark consumption-savings: 30 wealth points on [0, 3], 10 savings
/// points, incomes {1, 1.5} with 0.7 persistence, β = 0.95, u = √c, and the
/// chosen return process (deterministic 1.05 or an even coin on {1.0, 1.16}).
pub fn build_consumption_savings_default(stochastic_returns: bool) -> Result<OrderedModel> {
    let returns: Vec<(f64, f64)> = if stochastic_returns {
        vec![(1.0, 0.5), (1.16, 0.5)]
    } else {
        vec![(1.05, 1.0)]
    };
    build_consumption_savings(
        30,
        3.0,
        10,
        &[1.0, 1.5],
        &[vec![0.7, 0.3], vec![0.3, 0.7]],
        &returns,
        0.95,
        &|c| c.sqrt(),
    )
}

/// 100-state, 3-action chain used for aggregation experiments: from state s
/// action a moves up to min(s+1, 99) with probability 1/(0.1(s+1) + (a+1))
/// and otherwise down to max(s−1, 0); the reward is (s+1)(a+1) either way;
/// β = 0.95. The companion map groups ten consecutive blocks of ten states.
pub fn build_aggregation_example() -> Result<(FiniteMdp, AggregationMap)> {
    let n = 100;
    let mut transitions = Vec::new();
    let mut key = HashMap::new();
    for s in 0..n {
        for a in 0..3usize {
            let p_up = 1.0 / (0.1 * (s + 1) as f64 + (a + 1) as f64);
            let reward = ((s + 1) * (a + 1)) as f64;
            let up = (s + 1).min(n - 1);
            let down = s.saturating_sub(1);
            merge_push(&mut transitions, &mut key, s, a, up, p_up, reward);
            merge_push(&mut transitions, &mut key, s, a, down, 1.0 - p_up, reward);
        }
    }
    let mdp = FiniteMdp::new(n, 3, 0.95, vec![vec![0, 1, 2]; n], &transitions)?;
    let membership = (0..n).map(|s| s / 10).collect();
    let agg = AggregationMap::uniform(10, membership)?;
    Ok((mdp, agg))
}
