//! Command-line front end: model ingestion, solver dispatch, and
//! reproducible CSV/JSON artifact emission.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use dynopt_core::agg::{aggregation_error_bound, solve_aggregate, AggregationMap};
use dynopt_core::avg::{
    actor_critic, differential_values, projected_policy_gradient, reinforce_gradient_estimate,
    SoftmaxPolicy,
};
use dynopt_core::horizon::backward_induction;
use dynopt_core::iter::{
    least_squares_fit, noisy_gradient_descent, sgd_least_squares,
    stochastic_approximation_mean, synthetic_regression, StepSchedule,
};
use dynopt_core::lp::{lp_formulate, lp_solve};
use dynopt_core::mdp::{
    greedy_policy, value_iteration, FiniteMdp, StochasticPolicy,
};
use dynopt_core::models::{
    build_aggregation_example, build_consumption_savings_default, build_gridworld_default,
    build_house_sale, build_inventory_default, build_rideshare_default,
    house_sale_default_kernel, house_sale_default_rewards, GRIDWORLD_OBSTACLES,
};
use dynopt_core::rl::{
    one_hot_features, q_learning, q_learning_linear, sarsa, ExplorationPolicy, InitialState,
    LearningRate, MdpSimulator,
};
use dynopt_core::structure::{
    check_ascending_policy, check_concave_value, check_monotone_hypotheses,
    check_monotone_value, StructureReport,
};
use dynopt_core::Error as CoreError;

/// Exit codes: 0 success, 2 validation error, 3 non-convergence,
/// 4 ergodicity failure.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    NonConvergence(String),
    Ergodicity(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Ergodicity(_) => 4,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::NonConvergence(m) | CliError::Ergodicity(m) => m,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::NotErgodic(_) => CliError::Ergodicity(err.to_string()),
            CoreError::NonFinite(_) => CliError::NonConvergence(err.to_string()),
            _ => CliError::Validation(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Validation(format!("i/o error: {err}"))
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "dynopt",
    version,
    about = "Finite-MDP solvers and tabular reinforcement-learning laboratory"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output directory for CSV artifacts and the run manifest
    /// (default: $DYNOPT_OUT or the current directory).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact solvers: value iteration, linear programming, backward induction.
    Solve(SolveArgs),
    /// Solve on an aggregated state space and report the error bound.
    Aggregate(AggregateArgs),
    /// Simulation-based learning: Q-learning, SARSA, linear-FA Q-learning.
    Rl(RlArgs),
    /// Average-reward analysis and policy gradients.
    Avg(AvgArgs),
    /// Stochastic iterative methods: noisy GD, running means, SGD.
    Iter(IterArgs),
    /// Structural-property checks on ordered models.
    Check(CheckArgs),
    /// Validate or describe a model.
    Model(ModelArgs),
}

#[derive(Args, Debug)]
pub struct ModelSelect {
    /// Built-in model: inventory | house-sale | gridworld | rideshare |
    /// consumption-savings | aggregation-example.
    #[arg(long, conflicts_with = "model_json")]
    pub model: Option<String>,
    /// Path to a model JSON file instead of a built-in.
    #[arg(long)]
    pub model_json: Option<PathBuf>,
    /// Discount override applied after construction.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Double-match reward for the rideshare model.
    #[arg(long, default_value_t = 10.0)]
    pub x3: f64,
}

#[derive(ValueEnum, Clone, Debug)]
pub enum SolveMethod {
    Vi,
    Lp,
    Horizon,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long, value_enum)]
    pub method: SolveMethod,
    #[command(flatten)]
    pub model: ModelSelect,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_iter: usize,
    /// Periods for the finite-horizon method.
    #[arg(long, default_value_t = 50)]
    pub horizon: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct AggregateArgs {
    #[command(flatten)]
    pub model: ModelSelect,
    /// Aggregation map JSON ({"membership": [...], "d_weights": [...]?});
    /// defaults to the built-in blocks of the aggregation example.
    #[arg(long)]
    pub map: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Debug)]
pub enum RlAlgo {
    Q,
    Sarsa,
    Linq,
}

#[derive(Args, Debug)]
pub struct RlArgs {
    #[arg(long, value_enum)]
    pub algo: RlAlgo,
    #[command(flatten)]
    pub model: ModelSelect,
    #[arg(long, default_value_t = 1000)]
    pub episodes: usize,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.0)]
    pub decay: f64,
    /// Visit-based learning-rate constant: γ = c / (c + visits).
    #[arg(long, default_value_t = 1.0)]
    pub rate_c: f64,
    /// Target-weight refresh period for linear-FA Q-learning.
    #[arg(long, default_value_t = 1)]
    pub refresh: usize,
    #[arg(long, default_value_t = 0.0)]
    pub q_init: f64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Debug)]
pub enum AvgOp {
    Rho,
    H,
    Pg,
    Reinforce,
    Ac,
}

#[derive(Args, Debug)]
pub struct AvgArgs {
    #[arg(long, value_enum)]
    pub op: AvgOp,
    #[command(flatten)]
    pub model: ModelSelect,
    /// Projected-PG step size.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Projected-PG iterations.
    #[arg(long, default_value_t = 50_000)]
    pub iters: usize,
    /// REINFORCE horizon.
    #[arg(long, default_value_t = 500)]
    pub horizon: usize,
    /// Actor-critic simulation steps.
    #[arg(long, default_value_t = 200_000)]
    pub steps: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(ValueEnum, Clone, Debug)]
pub enum IterOp {
    NoisyGd,
    Sa,
    Sgd,
}

#[derive(ValueEnum, Clone, Debug)]
pub enum ScheduleKind {
    Constant,
    Harmonic,
    Power,
}

#[derive(Args, Debug)]
pub struct IterArgs {
    #[arg(long, value_enum)]
    pub op: IterOp,
    #[arg(long, value_enum, default_value_t = ScheduleKind::Harmonic)]
    pub schedule: ScheduleKind,
    /// Constant step, or the c in c/(c+t) and c/(t+1)^p.
    #[arg(long, default_value_t = 1.0)]
    pub gamma_c: f64,
    /// Exponent p of the power schedule.
    #[arg(long, default_value_t = 1.0)]
    pub gamma_p: f64,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    /// SGD minibatch size.
    #[arg(long, default_value_t = 1)]
    pub batch: usize,
    /// Synthetic-regression sample count for SGD.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// Ordered built-in model: inventory | consumption-savings.
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    /// Validate a model JSON file.
    #[arg(long, conflicts_with = "describe")]
    pub validate: Option<PathBuf>,
    /// Describe a built-in model or a JSON file.
    #[arg(long)]
    pub describe: Option<String>,
    #[arg(long, default_value_t = 10.0)]
    pub x3: f64,
}

/// On-disk model schema: explicit feasibility plus sparse transitions
/// `(s, a, s', p, R)`.
#[derive(Serialize, Deserialize)]
pub struct ModelFile {
    pub n_states: usize,
    pub n_actions: usize,
    pub discount: f64,
    pub feasible: Vec<Vec<usize>>,
    pub transitions: Vec<(usize, usize, usize, f64, f64)>,
}

impl ModelFile {
    pub fn to_mdp(&self) -> Result<FiniteMdp, CoreError> {
        FiniteMdp::new(
            self.n_states,
            self.n_actions,
            self.discount,
            self.feasible.clone(),
            &self.transitions,
        )
    }

    pub fn from_mdp(mdp: &FiniteMdp) -> Self {
        let mut transitions = Vec::new();
        for s in 0..mdp.n_states() {
            for &a in mdp.feasible(s) {
                for t in mdp.arcs(s, a).expect("feasible pair has arcs") {
                    transitions.push((s, a, t.next, t.prob, t.reward));
                }
            }
        }
        ModelFile {
            n_states: mdp.n_states(),
            n_actions: mdp.n_actions(),
            discount: mdp.discount(),
            feasible: (0..mdp.n_states()).map(|s| mdp.feasible(s).to_vec()).collect(),
            transitions,
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct AggregationMapFile {
    pub membership: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_weights: Option<Vec<f64>>,
}

fn load_model_file(path: &Path) -> CliResult<FiniteMdp> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("bad model JSON in {}: {e}", path.display())))?;
    Ok(file.to_mdp()?)
}

fn resolve_model(select: &ModelSelect) -> CliResult<FiniteMdp> {
    let mdp = if let Some(path) = &select.model_json {
        load_model_file(path)?
    } else {
        let name = select.model.as_deref().unwrap_or("");
        builtin_model(name, select.x3)?
    };
    match select.beta {
        Some(beta) => Ok(mdp.with_discount(beta)?),
        None => Ok(mdp),
    }
}

fn builtin_model(name: &str, x3: f64) -> CliResult<FiniteMdp> {
    match name {
        "inventory" => Ok(build_inventory_default()?.mdp),
        "house-sale" => {
            let n = 10;
            Ok(build_house_sale(
                0.9,
                &house_sale_default_rewards(n),
                &house_sale_default_kernel(n),
            )?)
        }
        "gridworld" => Ok(build_gridworld_default()?),
        "rideshare" => Ok(build_rideshare_default(x3)?),
        "consumption-savings" => Ok(build_consumption_savings_default(false)?.mdp),
        "aggregation-example" => Ok(build_aggregation_example()?.0),
        "" => Err(CliError::Validation(
            "select a model with --model NAME or --model-json PATH".into(),
        )),
        other => Err(CliError::Validation(format!(
            "unknown model '{other}'; built-ins: inventory, house-sale, gridworld, \
             rideshare, consumption-savings, aggregation-example"
        ))),
    }
}

/// 17-significant-digit decimal formatting used for every CSV number.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

struct RunWriter {
    dir: PathBuf,
    artifacts: Vec<String>,
}

impl RunWriter {
    fn new(out: &Option<PathBuf>) -> CliResult<Self> {
        let dir = out
            .clone()
            .or_else(|| std::env::var_os("DYNOPT_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        fs::create_dir_all(&dir)?;
        Ok(Self {
            dir,
            artifacts: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, content: &str) -> CliResult<()> {
        fs::write(self.dir.join(name), content)?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    fn finish(
        self,
        command: &str,
        seed: Option<u64>,
        params: serde_json::Value,
        residuals: serde_json::Value,
    ) -> CliResult<()> {
        let manifest = json!({
            "schema_version": 1,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "seed": seed,
            "params": params,
            "residuals": residuals,
            "artifacts": self.artifacts,
        });
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Validation(format!("manifest serialization: {e}")))?;
        fs::write(self.dir.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

fn value_csv(v: &[f64]) -> String {
    let mut out = String::from("state,value\n");
    for (s, x) in v.iter().enumerate() {
        let _ = writeln!(out, "{s},{}", fmt(*x));
    }
    out
}

fn policy_csv(actions: &[usize]) -> String {
    let mut out = String::from("state,action\n");
    for (s, a) in actions.iter().enumerate() {
        let _ = writeln!(out, "{s},{a}");
    }
    out
}

/// Policy grid in the benchmark's G/X/U/D/L/R format.
pub fn gridworld_policy_text(size: usize, target: (usize, usize), obstacles: &[(usize, usize)], actions: &[usize]) -> String {
    let mut out = String::new();
    for r in 0..size {
        let mut row = Vec::with_capacity(size);
        for c in 0..size {
            let glyph = if (r, c) == target {
                'G'
            } else if obstacles.contains(&(r, c)) {
                'X'
            } else {
                match actions[r * size + c] {
                    0 => 'U',
                    1 => 'D',
                    2 => 'L',
                    _ => 'R',
                }
            };
            row.push(glyph.to_string());
        }
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out.push_str("G: Goal, X: Obstacle, U: Up, D: Down, L: Left, R: Right\n");
    out
}

fn run_solve(args: &SolveArgs, out: &Option<PathBuf>) -> CliResult<()> {
    if !(args.tol > 0.0) {
        return Err(CliError::Validation(format!(
            "tolerance must be positive, got {}",
            args.tol
        )));
    }
    let mdp = resolve_model(&args.model)?;
    let mut writer = RunWriter::new(out)?;
    let params = json!({
        "method": format!("{:?}", args.method).to_lowercase(),
        "model": args.model.model,
        "model_json": args.model.model_json,
        "beta": args.model.beta,
        "tol": args.tol,
        "max_iter": args.max_iter,
        "horizon": args.horizon,
    });
    let residuals;
    match args.method {
        SolveMethod::Vi => {
            let (v, stats) =
                value_iteration(&mdp, &vec![0.0; mdp.n_states()], args.tol, args.max_iter)?;
            if !stats.converged {
                return Err(CliError::NonConvergence(format!(
                    "value iteration residual {} after {} iterations exceeds the stopping rule",
                    stats.final_residual, stats.iterations
                )));
            }
            let pi = greedy_policy(&mdp, &v)?;
            writer.write("value.csv", &value_csv(&v))?;
            writer.write("policy.csv", &policy_csv(&pi.actions))?;
            residuals = json!({
                "iterations": stats.iterations,
                "final_residual": stats.final_residual,
            });
        }
        SolveMethod::Lp => {
            let (v, objective) = lp_solve(&lp_formulate(&mdp)?)?;
            let pi = greedy_policy(&mdp, &v)?;
            writer.write("value.csv", &value_csv(&v))?;
            writer.write("policy.csv", &policy_csv(&pi.actions))?;
            residuals = json!({ "objective": objective });
        }
        SolveMethod::Horizon => {
            let values = backward_induction(&mdp, args.horizon)?;
            let mut out = String::from("period,state,value\n");
            for (t, v) in values.values.iter().enumerate() {
                for (s, x) in v.iter().enumerate() {
                    let _ = writeln!(out, "{t},{s},{}", fmt(*x));
                }
            }
            writer.write("horizon_values.csv", &out)?;
            residuals = json!({ "periods": args.horizon });
        }
    }
    writer.finish("solve", Some(args.seed), params, residuals)
}

fn load_aggregation_map(path: &Path, n_states: usize) -> CliResult<AggregationMap> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let file: AggregationMapFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("bad aggregation JSON: {e}")))?;
    if file.membership.len() != n_states {
        return Err(CliError::Validation(format!(
            "membership lists {} states, model has {n_states}",
            file.membership.len()
        )));
    }
    let n_aggregates = file.membership.iter().max().map_or(0, |m| m + 1);
    let map = match file.d_weights {
        Some(d) => AggregationMap::new(n_aggregates, file.membership, d)?,
        None => AggregationMap::uniform(n_aggregates, file.membership)?,
    };
    Ok(map)
}

fn run_aggregate(args: &AggregateArgs, out: &Option<PathBuf>) -> CliResult<()> {
    let (mdp, default_map) = if args.model.model.as_deref() == Some("aggregation-example")
        && args.model.model_json.is_none()
    {
        let (m, a) = build_aggregation_example()?;
        let m = match args.model.beta {
            Some(beta) => m.with_discount(beta)?,
            None => m,
        };
        (m, Some(a))
    } else {
        (resolve_model(&args.model)?, None)
    };
    let map = match (&args.map, default_map) {
        (Some(path), _) => load_aggregation_map(path, mdp.n_states())?,
        (None, Some(map)) => map,
        (None, None) => {
            return Err(CliError::Validation(
                "provide --map for models without a built-in aggregation".into(),
            ))
        }
    };
    let (f_star, stats) = solve_aggregate(&mdp, &map, args.tol)?;
    if !stats.converged {
        return Err(CliError::NonConvergence(
            "aggregate value iteration did not converge".into(),
        ));
    }
    let (v, vstats) = value_iteration(&mdp, &vec![0.0; mdp.n_states()], args.tol, 1_000_000)?;
    if !vstats.converged {
        return Err(CliError::NonConvergence(
            "exact value iteration did not converge".into(),
        ));
    }
    let report = aggregation_error_bound(&mdp, &map, &v, &f_star)?;

    let mut writer = RunWriter::new(out)?;
    let mut agg_csv = String::from("aggregate,value\n");
    for (x, f) in f_star.iter().enumerate() {
        let _ = writeln!(agg_csv, "{x},{}", fmt(*f));
    }
    writer.write("aggregate_values.csv", &agg_csv)?;
    let mut exp_csv = String::from("state,aggregate,exact_value,aggregate_value\n");
    for s in 0..mdp.n_states() {
        let x = map.membership()[s];
        let _ = writeln!(exp_csv, "{s},{x},{},{}", fmt(v[s]), fmt(f_star[x]));
    }
    writer.write("expanded_values.csv", &exp_csv)?;
    writer.finish(
        "aggregate",
        Some(args.seed),
        json!({
            "model": args.model.model,
            "model_json": args.model.model_json,
            "map": args.map,
            "beta": args.model.beta,
            "tol": args.tol,
        }),
        json!({
            "epsilon": report.epsilon,
            "bound": report.bound,
            "max_deviation": report.max_deviation,
            "iterations": stats.iterations,
        }),
    )
}

fn run_rl(args: &RlArgs, out: &Option<PathBuf>) -> CliResult<()> {
    let mdp = resolve_model(&args.model)?;
    let sim = MdpSimulator::new(&mdp, InitialState::Uniform);
    let rate = LearningRate::VisitBased { c: args.rate_c };
    let explore = ExplorationPolicy::EpsilonGreedy {
        epsilon: args.epsilon,
        decay: args.decay,
    };
    let beta = mdp.discount();
    let (q, stats) = match args.algo {
        RlAlgo::Q => q_learning(
            &sim,
            beta,
            &rate,
            &explore,
            args.episodes,
            args.steps,
            args.q_init,
            args.seed,
        )?,
        RlAlgo::Sarsa => sarsa(
            &sim,
            beta,
            &rate,
            &explore,
            args.episodes,
            args.steps,
            args.q_init,
            args.seed,
        )?,
        RlAlgo::Linq => {
            let (phi, dim) = one_hot_features(&mdp);
            let (lin, stats) = q_learning_linear(
                &sim,
                &phi,
                dim,
                beta,
                &rate,
                &explore,
                args.refresh,
                args.episodes,
                args.steps,
                args.seed,
            )?;
            // Expand θ back onto the tabular layout for reporting.
            let mut rows = Vec::with_capacity(mdp.n_states());
            let mut j = 0;
            for s in 0..mdp.n_states() {
                let mut row = Vec::with_capacity(mdp.feasible(s).len());
                for _ in mdp.feasible(s) {
                    row.push(lin.theta[j]);
                    j += 1;
                }
                rows.push(row);
            }
            (dynopt_core::mdp::QTable::from_rows(rows), stats)
        }
    };

    let mut writer = RunWriter::new(out)?;
    let mut q_csv = String::from("state,action,q,visits\n");
    for s in 0..mdp.n_states() {
        for (k, &a) in mdp.feasible(s).iter().enumerate() {
            let _ = writeln!(q_csv, "{s},{a},{},{}", fmt(q.rows()[s][k]), stats.visits[s][k]);
        }
    }
    writer.write("q_values.csv", &q_csv)?;

    let greedy: Vec<usize> = (0..mdp.n_states())
        .map(|s| {
            let row = &q.rows()[s];
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            mdp.feasible(s)[best]
        })
        .collect();
    writer.write("policy.csv", &policy_csv(&greedy))?;
    if args.model.model.as_deref() == Some("gridworld") {
        let text = gridworld_policy_text(8, (3, 7), &GRIDWORLD_OBSTACLES, &greedy);
        writer.write("policy_grid.txt", &text)?;
        println!("{text}");
    }
    writer.finish(
        "rl",
        Some(args.seed),
        json!({
            "algo": format!("{:?}", args.algo).to_lowercase(),
            "model": args.model.model,
            "model_json": args.model.model_json,
            "beta": args.model.beta,
            "episodes": args.episodes,
            "steps": args.steps,
            "epsilon": args.epsilon,
            "decay": args.decay,
            "rate_c": args.rate_c,
            "refresh": args.refresh,
            "q_init": args.q_init,
        }),
        json!({
            "total_steps": stats.total_steps,
            "min_visits": stats.min_visits(),
        }),
    )
}

fn run_avg(args: &AvgArgs, out: &Option<PathBuf>) -> CliResult<()> {
    let mdp = resolve_model(&args.model)?;
    let uniform = StochasticPolicy::uniform(&mdp);
    let mut writer = RunWriter::new(out)?;
    let params = json!({
        "op": format!("{:?}", args.op).to_lowercase(),
        "model": args.model.model,
        "model_json": args.model.model_json,
        "beta": args.model.beta,
        "alpha": args.alpha,
        "iters": args.iters,
        "horizon": args.horizon,
        "steps": args.steps,
    });
    let residuals;
    match args.op {
        AvgOp::Rho => {
            let sol = differential_values(&mdp, &uniform, 0)?;
            let mut csv = String::from("state,lambda\n");
            for (s, l) in sol.lambda.iter().enumerate() {
                let _ = writeln!(csv, "{s},{}", fmt(*l));
            }
            writer.write("stationary.csv", &csv)?;
            residuals = json!({ "rho": sol.rho });
        }
        AvgOp::H => {
            let sol = differential_values(&mdp, &uniform, 0)?;
            let mut csv = String::from("state,h\n");
            for (s, h) in sol.h.iter().enumerate() {
                let _ = writeln!(csv, "{s},{}", fmt(*h));
            }
            writer.write("h.csv", &csv)?;
            let mut q_csv = String::from("state,action,q,advantage\n");
            for s in 0..mdp.n_states() {
                for (k, &a) in mdp.feasible(s).iter().enumerate() {
                    let _ = writeln!(
                        q_csv,
                        "{s},{a},{},{}",
                        fmt(sol.q.rows()[s][k]),
                        fmt(sol.advantage.rows()[s][k])
                    );
                }
            }
            writer.write("q_advantage.csv", &q_csv)?;
            residuals = json!({ "rho": sol.rho });
        }
        AvgOp::Pg => {
            let (policy, trajectory) =
                projected_policy_gradient(&mdp, &uniform, args.alpha, args.iters)?;
            let mut csv = String::from("iteration,rho\n");
            for (t, r) in trajectory.iter().enumerate() {
                let _ = writeln!(csv, "{t},{}", fmt(*r));
            }
            writer.write("rho_trajectory.csv", &csv)?;
            let mut p_csv = String::from("state,action,probability\n");
            for s in 0..mdp.n_states() {
                for &a in mdp.feasible(s) {
                    let _ = writeln!(p_csv, "{s},{a},{}", fmt(policy.probs[s][a]));
                }
            }
            writer.write("policy.csv", &p_csv)?;
            residuals = json!({ "final_rho": trajectory.last() });
        }
        AvgOp::Reinforce => {
            let sim = MdpSimulator::new(&mdp, InitialState::Fixed(0));
            let theta = SoftmaxPolicy::zeros(
                &(0..mdp.n_states())
                    .map(|s| mdp.feasible(s).len())
                    .collect::<Vec<_>>(),
            );
            let grad = reinforce_gradient_estimate(&sim, &theta, args.horizon, None, args.seed)?;
            let mut csv = String::from("state,action,gradient\n");
            for s in 0..mdp.n_states() {
                for (k, &a) in mdp.feasible(s).iter().enumerate() {
                    let _ = writeln!(csv, "{s},{a},{}", fmt(grad[s][k]));
                }
            }
            writer.write("gradient.csv", &csv)?;
            residuals = json!({ "horizon": args.horizon });
        }
        AvgOp::Ac => {
            let sim = MdpSimulator::new(&mdp, InitialState::Fixed(0));
            let theta0 = SoftmaxPolicy::zeros(
                &(0..mdp.n_states())
                    .map(|s| mdp.feasible(s).len())
                    .collect::<Vec<_>>(),
            );
            let (phi, dim) = one_hot_features(&mdp);
            let (theta, w, rho_traj) = actor_critic(
                &sim,
                &theta0,
                &vec![0.0; dim],
                &phi,
                &StepSchedule::Power { c: 0.5, p: 0.6 },
                &StepSchedule::Power { c: 0.1, p: 0.8 },
                &StepSchedule::Power { c: 0.5, p: 0.6 },
                args.steps,
                args.seed,
            )?;
            let mut csv = String::from("step,rho\n");
            // Thin the trajectory to at most 10k rows, keeping the final step.
            let stride = (rho_traj.len() / 10_000).max(1);
            for (t, r) in rho_traj.iter().enumerate() {
                if t % stride == 0 || t + 1 == rho_traj.len() {
                    let _ = writeln!(csv, "{t},{}", fmt(*r));
                }
            }
            writer.write("rho_trajectory.csv", &csv)?;
            let mut t_csv = String::from("state,action,theta,w\n");
            let mut j = 0;
            for s in 0..mdp.n_states() {
                for (k, &a) in mdp.feasible(s).iter().enumerate() {
                    let _ = writeln!(t_csv, "{s},{a},{},{}", fmt(theta.theta[s][k]), fmt(w[j]));
                    j += 1;
                }
            }
            writer.write("actor_critic.csv", &t_csv)?;
            residuals = json!({ "final_rho": rho_traj.last() });
        }
    }
    writer.finish("avg", Some(args.seed), params, residuals)
}

fn make_schedule(args: &IterArgs) -> StepSchedule {
    match args.schedule {
        ScheduleKind::Constant => StepSchedule::Constant(args.gamma_c),
        ScheduleKind::Harmonic => StepSchedule::Harmonic { c: args.gamma_c },
        ScheduleKind::Power => StepSchedule::Power {
            c: args.gamma_c,
            p: args.gamma_p,
        },
    }
}

fn trajectory_csv(f_values: &[f64], grad_norms: &[f64]) -> String {
    let mut out = String::from("iteration,f,grad_norm\n");
    for (t, (f, g)) in f_values.iter().zip(grad_norms).enumerate() {
        let _ = writeln!(out, "{t},{},{}", fmt(*f), fmt(*g));
    }
    out
}

fn run_iter(args: &IterArgs, out: &Option<PathBuf>) -> CliResult<()> {
    let schedule = make_schedule(args);
    let mut writer = RunWriter::new(out)?;
    let params = json!({
        "op": format!("{:?}", args.op),
        "schedule": format!("{:?}", args.schedule).to_lowercase(),
        "gamma_c": args.gamma_c,
        "gamma_p": args.gamma_p,
        "steps": args.steps,
        "batch": args.batch,
        "n": args.n,
    });
    let residuals;
    match args.op {
        IterOp::NoisyGd => {
            // Benchmark objective: strongly convex quadratic in 2-d.
            let f = |x: &[f64]| x[0] * x[0] + 2.0 * x[1] * x[1];
            let grad = |x: &[f64]| vec![2.0 * x[0], 4.0 * x[1]];
            let noise = |rng: &mut rand_chacha::ChaCha8Rng| {
                use rand::Rng;
                vec![rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)]
            };
            let traj = noisy_gradient_descent(
                f,
                grad,
                noise,
                &[3.0, -2.0],
                &schedule,
                args.steps,
                args.seed,
            )?;
            writer.write(
                "trajectory.csv",
                &trajectory_csv(&traj.f_values, &traj.grad_norms),
            )?;
            residuals = json!({
                "final_f": traj.f_values.last(),
                "final_grad_norm": traj.grad_norms.last(),
            });
        }
        IterOp::Sa => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
            let mut samples = Vec::with_capacity(args.steps);
            for _ in 0..args.steps {
                samples.push(rng.gen_range(0.0..1.0) + 0.5);
            }
            let trajectory = stochastic_approximation_mean(
                |t| samples[t],
                0.0,
                &StepSchedule::Harmonic { c: 1.0 },
                args.steps,
            )?;
            let mut csv = String::from("iteration,x\n");
            for (t, x) in trajectory.iter().enumerate() {
                let _ = writeln!(csv, "{t},{}", fmt(*x));
            }
            writer.write("trajectory.csv", &csv)?;
            // Running-mean identity: x_T = (x_0 + Σ samples)/(T+1).
            let exact = samples.iter().sum::<f64>() / (args.steps + 1) as f64;
            residuals = json!({
                "final_x": trajectory.last(),
                "identity_gap": (trajectory.last().unwrap() - exact).abs(),
            });
        }
        IterOp::Sgd => {
            let theta_star = [2.0, -3.5];
            let (xs, ys) = synthetic_regression(args.n, &theta_star, args.seed);
            let traj = sgd_least_squares(
                &xs,
                &ys,
                &[0.0, 0.0],
                &schedule,
                args.batch,
                args.steps,
                args.seed,
            )?;
            let theta_hat = least_squares_fit(&xs, &ys)?;
            let theta_t = traj.final_iterate();
            let gap = theta_t
                .iter()
                .zip(&theta_hat)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            writer.write(
                "trajectory.csv",
                &trajectory_csv(&traj.f_values, &traj.grad_norms),
            )?;
            let mut csv = String::from("component,theta_sgd,theta_normal_equations\n");
            for (i, (a, b)) in theta_t.iter().zip(&theta_hat).enumerate() {
                let _ = writeln!(csv, "{i},{},{}", fmt(*a), fmt(*b));
            }
            writer.write("theta.csv", &csv)?;
            residuals = json!({ "distance_to_normal_equations": gap });
        }
    }
    writer.finish("iter", Some(args.seed), params, residuals)
}

fn report_row(report: &StructureReport) -> String {
    format!(
        "{},{},{},{}\n",
        report.property.replace(',', ";"),
        report.holds,
        fmt(report.worst_violation),
        report
            .witness
            .as_deref()
            .unwrap_or("")
            .replace(',', ";")
    )
}

fn run_check(args: &CheckArgs, out: &Option<PathBuf>) -> CliResult<()> {
    let model = match args.model.as_str() {
        "inventory" => build_inventory_default()?,
        "consumption-savings" => build_consumption_savings_default(false)?,
        other => {
            return Err(CliError::Validation(format!(
                "unknown ordered model '{other}'; built-ins: inventory, consumption-savings"
            )))
        }
    };
    let (v, stats) = value_iteration(&model.mdp, &vec![0.0; model.mdp.n_states()], 1e-10, 1_000_000)?;
    if !stats.converged {
        return Err(CliError::NonConvergence(
            "value iteration did not converge".into(),
        ));
    }
    let mut reports = Vec::new();
    reports.push(check_monotone_value(&model, &v)?);
    if model.state_coords.iter().all(|c| c.len() == 1) {
        reports.push(check_monotone_hypotheses(&model)?);
    }
    // Argmax sets in action coordinates for the ascending-policy check.
    let mut argmax_sets: Vec<Vec<Vec<i64>>> = Vec::with_capacity(model.mdp.n_states());
    for s in 0..model.mdp.n_states() {
        let mut best = f64::NEG_INFINITY;
        for &a in model.mdp.feasible(s) {
            best = best.max(model.mdp.q_value(s, a, &v)?);
        }
        let mut set = Vec::new();
        for &a in model.mdp.feasible(s) {
            if model.mdp.q_value(s, a, &v)? >= best - args.tol {
                set.push(model.action_coords[a].clone());
            }
        }
        argmax_sets.push(set);
    }
    reports.push(check_ascending_policy(&argmax_sets)?);
    if model.mdp.n_states() >= 3 && model.state_coords.iter().all(|c| c.len() == 1) {
        // Concavity along the 1-d grid in coordinate order.
        let mut order: Vec<usize> = (0..model.mdp.n_states()).collect();
        order.sort_by_key(|&s| model.state_coords[s][0]);
        let v_sorted: Vec<f64> = order.iter().map(|&s| v[s]).collect();
        reports.push(check_concave_value(&v_sorted)?);
    }

    let mut writer = RunWriter::new(out)?;
    let mut csv = String::from("property,holds,worst_violation,witness\n");
    for report in &reports {
        csv.push_str(&report_row(report));
    }
    writer.write("structure_report.csv", &csv)?;
    let summary: BTreeMap<String, bool> = reports
        .iter()
        .map(|r| (r.property.clone(), r.holds))
        .collect();
    for report in &reports {
        println!(
            "{}: {}",
            report.property,
            if report.holds { "holds" } else { "VIOLATED" }
        );
    }
    writer.finish(
        "check",
        Some(args.seed),
        json!({ "model": args.model, "tol": args.tol }),
        json!(summary),
    )
}

fn run_model(args: &ModelArgs) -> CliResult<()> {
    if let Some(path) = &args.validate {
        let mdp = load_model_file(path)?;
        println!(
            "valid model: {} states, {} actions, discount {}",
            mdp.n_states(),
            mdp.n_actions(),
            mdp.discount()
        );
        return Ok(());
    }
    if let Some(name) = &args.describe {
        let path = Path::new(name);
        let mdp = if path.extension().is_some_and(|e| e == "json") {
            load_model_file(path)?
        } else {
            builtin_model(name, args.x3)?
        };
        let arcs: usize = (0..mdp.n_states())
            .map(|s| {
                mdp.feasible(s)
                    .iter()
                    .map(|&a| mdp.arcs(s, a).map(|r| r.len()).unwrap_or(0))
                    .sum::<usize>()
            })
            .sum();
        println!("model: {name}");
        println!("states: {}", mdp.n_states());
        println!("actions: {}", mdp.n_actions());
        println!("discount: {}", mdp.discount());
        println!("transitions: {arcs}");
        return Ok(());
    }
    Err(CliError::Validation(
        "use --validate PATH or --describe NAME".into(),
    ))
}

/// Parses arguments and executes; returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help/version print and exit 0; bad flags are validation errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Solve(args) => run_solve(args, &cli.out),
        Command::Aggregate(args) => run_aggregate(args, &cli.out),
        Command::Rl(args) => run_rl(args, &cli.out),
        Command::Avg(args) => run_avg(args, &cli.out),
        Command::Iter(args) => run_iter(args, &cli.out),
        Command::Check(args) => run_check(args, &cli.out),
        Command::Model(args) => run_model(args),
    };
    match result {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.exit_code()
        }
    }
}
