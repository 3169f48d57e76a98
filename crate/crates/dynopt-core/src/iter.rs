//! Stochastic iterative processes `x_{t+1} = x_t + γ_t Y_t`: step-size
//! schedules with Robbins–Monro diagnostics, noisy gradient descent,
//! stochastic approximation of a mean, and mini-batch SGD on least squares.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;

/// Hard cap on iterate magnitude; the theory assumes conditions that prevent
/// blowup, so crossing this is reported as divergence.
const DIVERGENCE_GUARD: f64 = 1e12;

/// Deterministic step-size rule γ_t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSchedule {
    /// γ_t = γ for all t.
    Constant(f64),
    /// γ_t = c / (c + t).
    Harmonic { c: f64 },
    /// γ_t = c / (t + 1)^p.
    Power { c: f64, p: f64 },
}

impl StepSchedule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StepSchedule::Constant(g) => {
                if !(g.is_finite() && g >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "constant step must be finite and non-negative, got {g}"
                    )));
                }
            }
            StepSchedule::Harmonic { c } => {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "harmonic schedule needs c > 0, got {c}"
                    )));
                }
            }
            StepSchedule::Power { c, p } => {
                if !(c.is_finite() && c > 0.0) || !(p.is_finite() && p >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "power schedule needs c > 0 and p ≥ 0, got c={c}, p={p}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Step size at iteration t (t = 0, 1, 2, …).
    pub fn gamma(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::Constant(g) => g,
            StepSchedule::Harmonic { c } => c / (c + t as f64),
            StepSchedule::Power { c, p } => c / ((t + 1) as f64).powf(p),
        }
    }
}

/// Partial sums of γ and γ² together with the analytic verdict on the
/// classical conditions Σγ_t = ∞ and Σγ_t² < ∞.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobbinsMonroReport {
    pub partial_sum: f64,
    pub partial_sum_sq: f64,
    /// Σγ_t = ∞ holds analytically for this rule.
    pub sum_diverges: bool,
    /// Σγ_t² < ∞ holds analytically for this rule.
    pub sum_sq_converges: bool,
}

impl RobbinsMonroReport {
    /// Both conditions hold.
    pub fn satisfies(&self) -> bool {
        self.sum_diverges && self.sum_sq_converges
    }
}

/// Computes partial sums Σγ_t and Σγ_t² over t ∈ [0, T] and classifies the
/// rule analytically: harmonic satisfies both conditions; a positive constant
/// has divergent Σγ²; power rules satisfy both only for p ∈ (1/2, 1].
pub fn robbins_monro_check(schedule: &StepSchedule, horizon: usize) -> Result<RobbinsMonroReport> {
    schedule.validate()?;
    if horizon < 1 {
        return Err(Error::InvalidParameter("horizon must be ≥ 1".into()));
    }
    let mut partial_sum = 0.0;
    let mut partial_sum_sq = 0.0;
    for t in 0..=horizon {
        let g = schedule.gamma(t);
        partial_sum += g;
        partial_sum_sq += g * g;
    }
    let (sum_diverges, sum_sq_converges) = match *schedule {
        StepSchedule::Constant(g) => (g > 0.0, g == 0.0),
        StepSchedule::Harmonic { .. } => (true, true),
        StepSchedule::Power { p, .. } => (p <= 1.0, p > 0.5),
    };
    Ok(RobbinsMonroReport {
        partial_sum,
        partial_sum_sq,
        sum_diverges,
        sum_sq_converges,
    })
}

/// Recorded run of a stochastic iterative process.
#[derive(Debug, Clone, PartialEq)]
pub struct IterTrajectory {
    /// Iterates x_0, …, x_T (T+1 entries).
    pub iterates: Vec<Vec<f64>>,
    /// Objective values f(x_t), aligned with `iterates`.
    pub f_values: Vec<f64>,
    /// ‖∇f(x_t)‖₂, aligned with `iterates`.
    pub grad_norms: Vec<f64>,
    /// ‖Y_t‖₂² of the realized update directions (T entries).
    pub update_sq_norms: Vec<f64>,
}

impl IterTrajectory {
    pub fn final_iterate(&self) -> &[f64] {
        self.iterates.last().expect("trajectory is never empty")
    }

    pub fn final_grad_norm(&self) -> f64 {
        *self.grad_norms.last().expect("trajectory is never empty")
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn guard_finite(x: &[f64], what: &str) -> Result<()> {
    if x.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_GUARD) {
        return Err(Error::NonFinite(format!("{what} diverged: iterate left the guard region")));
    }
    Ok(())
}

/// Noisy gradient descent `x_{t+1} = x_t − γ_t (∇f(x_t) + Z_t)` with a
/// caller-supplied zero-mean noise sampler.
pub fn noisy_gradient_descent(
    f: impl Fn(&[f64]) -> f64,
    grad: impl Fn(&[f64]) -> Vec<f64>,
    mut noise: impl FnMut(&mut ChaCha8Rng) -> Vec<f64>,
    x0: &[f64],
    schedule: &StepSchedule,
    steps: usize,
    seed: u64,
) -> Result<IterTrajectory> {
    schedule.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = x0.to_vec();
    let mut iterates = vec![x.clone()];
    let mut f_values = vec![f(&x)];
    let mut grad_norms = vec![norm2(&grad(&x))];
    let mut update_sq_norms = Vec::with_capacity(steps);
    for t in 0..steps {
        let g = grad(&x);
        let z = noise(&mut rng);
        if z.len() != x.len() {
            return Err(Error::DimensionMismatch(
                "noise sample has wrong dimension".into(),
            ));
        }
        let gamma = schedule.gamma(t);
        let mut sq = 0.0;
        for i in 0..x.len() {
            let y = -(g[i] + z[i]);
            sq += y * y;
            x[i] += gamma * y;
        }
        guard_finite(&x, "noisy gradient descent")?;
        update_sq_norms.push(sq);
        iterates.push(x.clone());
        f_values.push(f(&x));
        grad_norms.push(norm2(&grad(&x)));
    }
    Ok(IterTrajectory {
        iterates,
        f_values,
        grad_norms,
        update_sq_norms,
    })
}

/// Stochastic approximation of a mean: `x_{t+1} = (1 − γ)x_t + γ V_t`, with
/// the schedule evaluated at step index t + 1 so that the initial point
/// counts as the first sample. With the harmonic rule γ = 1/(1+t) this makes
/// the iterate the exact running mean: `x_T = (x_0 + Σ_{t<T} V_t)/(T+1)`.
pub fn stochastic_approximation_mean(
    mut stream: impl FnMut(usize) -> f64,
    x0: f64,
    schedule: &StepSchedule,
    steps: usize,
) -> Result<Vec<f64>> {
    schedule.validate()?;
    let mut x = x0;
    let mut trajectory = vec![x];
    for t in 0..steps {
        let v = stream(t);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("sample at step {t} is not finite")));
        }
        let g = schedule.gamma(t + 1);
        x = (1.0 - g) * x + g * v;
        if !x.is_finite() {
            return Err(Error::NonFinite(format!("iterate at step {t} is not finite")));
        }
        trajectory.push(x);
    }
    Ok(trajectory)
}

/// Mini-batch SGD on the mean-squared loss `f(θ) = (1/N) Σ (y_i − θᵀx_i)²`,
/// sampling batch members uniformly with replacement.
pub fn sgd_least_squares(
    xs: &[Vec<f64>],
    ys: &[f64],
    theta0: &[f64],
    schedule: &StepSchedule,
    batch_size: usize,
    steps: usize,
    seed: u64,
) -> Result<IterTrajectory> {
    schedule.validate()?;
    let n = xs.len();
    let d = theta0.len();
    if n == 0 || ys.len() != n {
        return Err(Error::DimensionMismatch(
            "need equally many feature rows and responses".into(),
        ));
    }
    if xs.iter().any(|x| x.len() != d) {
        return Err(Error::DimensionMismatch(
            "feature rows must match the parameter dimension".into(),
        ));
    }
    if batch_size == 0 || batch_size > n {
        return Err(Error::InvalidParameter(format!(
            "batch size must lie in [1, {n}], got {batch_size}"
        )));
    }

    let loss = |theta: &[f64]| -> f64 {
        let mut total = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let e = y - dot(theta, x);
            total += e * e;
        }
        total / n as f64
    };
    let full_grad = |theta: &[f64]| -> Vec<f64> {
        let mut g = vec![0.0; d];
        for (x, &y) in xs.iter().zip(ys) {
            let e = dot(theta, x) - y;
            for j in 0..d {
                g[j] += 2.0 * e * x[j] / n as f64;
            }
        }
        g
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = theta0.to_vec();
    let mut iterates = vec![theta.clone()];
    let mut f_values = vec![loss(&theta)];
    let mut grad_norms = vec![norm2(&full_grad(&theta))];
    let mut update_sq_norms = Vec::with_capacity(steps);
    for t in 0..steps {
        let mut g = vec![0.0; d];
        for _ in 0..batch_size {
            let i = rng.gen_range(0..n);
            let e = dot(&theta, &xs[i]) - ys[i];
            for j in 0..d {
                g[j] += 2.0 * e * xs[i][j] / batch_size as f64;
            }
        }
        let gamma = schedule.gamma(t);
        let mut sq = 0.0;
        for j in 0..d {
            sq += g[j] * g[j];
            theta[j] -= gamma * g[j];
        }
        guard_finite(&theta, "stochastic gradient descent")?;
        update_sq_norms.push(sq);
        iterates.push(theta.clone());
        f_values.push(loss(&theta));
        grad_norms.push(norm2(&full_grad(&theta)));
    }
    Ok(IterTrajectory {
        iterates,
        f_values,
        grad_norms,
        update_sq_norms,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Draws a seeded synthetic regression data set `y = Xθ* + ε` with standard
/// normal features and unit normal noise.
pub fn synthetic_regression(
    n: usize,
    theta_star: &[f64],
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = theta_star.len();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let noise: f64 = StandardNormal.sample(&mut rng);
        ys.push(dot(&x, theta_star) + noise);
        xs.push(x);
    }
    (xs, ys)
}

/// Closed-form least-squares fit via the normal equations XᵀX θ = Xᵀy.
pub fn least_squares_fit(xs: &[Vec<f64>], ys: &[f64]) -> Result<Vec<f64>> {
    if xs.is_empty() || xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(
            "need equally many feature rows and responses".into(),
        ));
    }
    let d = xs[0].len();
    let mut gram = vec![vec![0.0; d]; d];
    let mut rhs = vec![0.0; d];
    for (x, &y) in xs.iter().zip(ys) {
        for i in 0..d {
            for j in 0..d {
                gram[i][j] += x[i] * x[j];
            }
            rhs[i] += x[i] * y;
        }
    }
    linalg::solve_dense(&gram, &rhs)
}
