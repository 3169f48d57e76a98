//! Linear-programming formulation of the discounted value function and a
//! bundled dense two-phase simplex solver (Bland's rule, anti-cycling).
//!
//! The MDP program has one variable per state and one ≥-constraint per
//! feasible pair:
//!
//! ```text
//! min Σ_i x_i   s.t.   x_s − β Σ_{s'} p(s,a,s') x_{s'} ≥ r(s,a)
//! ```
//!
//! Its unique optimum is the value function, with at least one tight
//! constraint per state.

use crate::error::{Error, Result};
use crate::mdp::FiniteMdp;

/// A minimization LP with all constraints of sense ≥ and free variables.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Objective coefficients c (minimized).
    pub objective: Vec<f64>,
    /// Dense constraint rows A.
    pub rows: Vec<Vec<f64>>,
    /// Right-hand sides b; each row reads `A_i · x ≥ b_i`.
    pub rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, rows: Vec<Vec<f64>>, rhs: Vec<f64>) -> Result<Self> {
        let n = objective.len();
        if rows.len() != rhs.len() {
            return Err(Error::DimensionMismatch(
                "constraint rows and right-hand sides differ in length".into(),
            ));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    row.len()
                )));
            }
            if row.iter().all(|&c| c == 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "constraint {i} has no nonzero coefficient"
                )));
            }
        }
        Ok(Self { objective, rows, rhs })
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.rows.len()
    }

    /// Plain-text tableau dump for inspection.
    pub fn tableau_text(&self) -> String {
        let mut out = String::new();
        out.push_str("minimize  ");
        for (j, c) in self.objective.iter().enumerate() {
            if j > 0 {
                out.push_str(" + ");
            }
            out.push_str(&format!("{c:.6}*x{j}"));
        }
        out.push('\n');
        for (row, b) in self.rows.iter().zip(&self.rhs) {
            out.push_str("s.t.      ");
            let mut first = true;
            for (j, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                if !first {
                    out.push_str(" + ");
                }
                out.push_str(&format!("{a:.6}*x{j}"));
                first = false;
            }
            out.push_str(&format!(" >= {b:.6}\n"));
        }
        out
    }
}

/// Builds the value-function LP of a discounted model: variables x_s, one
/// constraint `x_s − β Σ p(s,a,s') x_{s'} ≥ r(s,a)` per feasible (s,a),
/// objective `min Σ_s x_s`.
pub fn lp_formulate(mdp: &FiniteMdp) -> Result<LinearProgram> {
    mdp.require_discounted()?;
    let n = mdp.n_states();
    let beta = mdp.discount();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for s in 0..n {
        for &a in mdp.feasible(s) {
            let mut row = vec![0.0; n];
            row[s] += 1.0;
            for t in mdp.arcs(s, a)? {
                row[t.next] -= beta * t.prob;
            }
            rows.push(row);
            rhs.push(mdp.expected_reward(s, a)?);
        }
    }
    LinearProgram::new(vec![1.0; n], rows, rhs)
}

/// Solves a [`LinearProgram`] with a dense two-phase simplex using Bland's
/// rule. Free variables are split as x = x⁺ − x⁻. Returns the optimal point
/// and objective value.
pub fn lp_solve(lp: &LinearProgram) -> Result<(Vec<f64>, f64)> {
    let n = lp.n_vars();
    let m = lp.n_constraints();
    // Column layout: [x⁺ (n) | x⁻ (n) | surplus (m) | artificial (m)].
    let n_plus_minus = 2 * n;
    let n_struct = n_plus_minus + m; // all non-artificial columns
    let total = n_struct + m;

    // Equality form rows: A x⁺ − A x⁻ − s = b, then sign-normalized so b ≥ 0.
    let mut tab = vec![vec![0.0; total + 1]; m];
    for i in 0..m {
        let flip = if lp.rhs[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            tab[i][j] = flip * lp.rows[i][j];
            tab[i][n + j] = -flip * lp.rows[i][j];
        }
        tab[i][n_plus_minus + i] = -flip; // surplus
        tab[i][n_struct + i] = 1.0; // artificial
        tab[i][total] = flip * lp.rhs[i];
    }
    let mut basis: Vec<usize> = (0..m).map(|i| n_struct + i).collect();

    // Phase 1: minimize the sum of artificials.
    let mut phase1_cost = vec![0.0; total];
    for c in phase1_cost.iter_mut().skip(n_struct) {
        *c = 1.0;
    }
    let phase1_obj = simplex_iterate(&mut tab, &mut basis, &phase1_cost, total)?;
    if phase1_obj > 1e-7 {
        return Err(Error::LpInfeasible);
    }

    // Pivot any residual artificial out of the basis, or drop redundant rows.
    let mut keep_rows: Vec<bool> = vec![true; m];
    for i in 0..m {
        if basis[i] < n_struct {
            continue;
        }
        if let Some(j) = (0..n_struct).find(|&j| tab[i][j].abs() > 1e-9) {
            pivot(&mut tab, &mut basis, i, j, total);
        } else {
            keep_rows[i] = false; // redundant constraint
        }
    }
    let mut rows_kept = Vec::new();
    let mut basis_kept = Vec::new();
    for (i, keep) in keep_rows.iter().enumerate() {
        if *keep {
            rows_kept.push(tab[i].clone());
            basis_kept.push(basis[i]);
        }
    }
    let mut tab = rows_kept;
    let mut basis = basis_kept;

    // Phase 2: original objective over non-artificial columns only
    // (artificial columns are masked out by an effectively infinite cost).
    let mut cost = vec![0.0; total];
    for j in 0..n {
        cost[j] = lp.objective[j];
        cost[n + j] = -lp.objective[j];
    }
    let obj = simplex_iterate_masked(&mut tab, &mut basis, &cost, total, n_struct)?;

    let mut x = vec![0.0; n];
    for (i, &bj) in basis.iter().enumerate() {
        let value = tab[i][total];
        if bj < n {
            x[bj] += value;
        } else if bj < 2 * n {
            x[bj - n] -= value;
        }
    }
    Ok((x, obj))
}

/// Runs simplex to optimality for the given cost vector; all columns allowed.
fn simplex_iterate(
    tab: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    total: usize,
) -> Result<f64> {
    simplex_iterate_masked(tab, basis, cost, total, total)
}

/// Simplex core; columns with index ≥ `allowed` may never enter the basis.
fn simplex_iterate_masked(
    tab: &mut [Vec<f64>],
    basis: &mut [usize],
    cost: &[f64],
    total: usize,
    allowed: usize,
) -> Result<f64> {
    let m = tab.len();
    let max_pivots = 50_000usize;
    for _ in 0..max_pivots {
        // Reduced costs: c_j − c_B B⁻¹ A_j, computed from the tableau.
        let mut entering = None;
        for j in 0..allowed {
            if basis.contains(&j) {
                continue;
            }
            let mut reduced = cost[j];
            for i in 0..m {
                reduced -= cost[basis[i]] * tab[i][j];
            }
            if reduced < -1e-9 {
                entering = Some(j); // Bland: first (lowest-index) candidate
                break;
            }
        }
        let Some(j) = entering else {
            let obj: f64 = (0..m).map(|i| cost[basis[i]] * tab[i][total]).sum();
            return Ok(obj);
        };

        // Ratio test; Bland tie-break by lowest basis index.
        let mut leaving: Option<(usize, f64)> = None;
        for i in 0..m {
            if tab[i][j] > 1e-9 {
                let ratio = tab[i][total] / tab[i][j];
                match leaving {
                    None => leaving = Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-12
                            || ((ratio - lr).abs() <= 1e-12 && basis[i] < basis[li])
                        {
                            leaving = Some((i, ratio));
                        }
                    }
                }
            }
        }
        let Some((i, _)) = leaving else {
            return Err(Error::LpUnbounded);
        };
        pivot(tab, basis, i, j, total);
    }
    Err(Error::SingularSystem(
        "simplex exceeded its pivot budget".into(),
    ))
}

fn pivot(tab: &mut [Vec<f64>], basis: &mut [usize], row: usize, col: usize, total: usize) {
    let pivot_val = tab[row][col];
    for v in tab[row].iter_mut() {
        *v /= pivot_val;
    }
    for i in 0..tab.len() {
        if i == row {
            continue;
        }
        let factor = tab[i][col];
        if factor == 0.0 {
            continue;
        }
        for j in 0..=total {
            let base = tab[row][j];
            tab[i][j] -= factor * base;
        }
    }
    basis[row] = col;
}
