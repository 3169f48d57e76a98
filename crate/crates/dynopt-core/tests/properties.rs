//! Cross-cutting property tests on seeded random models: operator laws,
//! solver agreement, aggregation error bounds, and average-reward identities.

use proptest::prelude::*;

use dynopt_core::agg::{aggregate_operator_apply, aggregation_error_bound, solve_aggregate, AggregationMap};
use dynopt_core::avg::{
    average_reward, differential_values, performance_difference, simplex_project_row,
};
use dynopt_core::iter::{robbins_monro_check, StepSchedule};
use dynopt_core::linalg::sup_dist;
use dynopt_core::lp::{lp_formulate, lp_solve};
use dynopt_core::mdp::{
    bellman_apply, bellman_policy_apply, enumerate_deterministic_policies, policy_evaluation,
    random_mdp, random_stochastic_policy, value_iteration, EvalMethod, FiniteMdp,
};
use dynopt_core::structure::{fsd_compare, FsdOrder};

fn small_mdp(seed: u64, beta: f64) -> FiniteMdp {
    random_mdp(4, 3, beta, 3, (-1.0, 2.0), seed).unwrap()
}

fn random_vec(seed: u64, n: usize, scale: f64) -> Vec<f64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
}

#[test]
fn vi_lp_and_enumeration_agree_on_random_models() {
    for seed in 0..12 {
        let mdp = small_mdp(seed, 0.9);
        let (v_vi, stats) = value_iteration(&mdp, &vec![0.0; 4], 1e-10, 100_000).unwrap();
        assert!(stats.converged);
        let (v_lp, _) = lp_solve(&lp_formulate(&mdp).unwrap()).unwrap();
        let v_enum: Vec<f64> = {
            let mut best = vec![f64::NEG_INFINITY; 4];
            for pi in enumerate_deterministic_policies(&mdp) {
                let v = policy_evaluation(&mdp, &pi.to_stochastic(&mdp), EvalMethod::Direct)
                    .unwrap();
                for (b, x) in best.iter_mut().zip(v) {
                    *b = b.max(x);
                }
            }
            best
        };
        assert!(sup_dist(&v_vi, &v_lp) <= 1e-7, "seed {seed}: VI vs LP");
        assert!(
            sup_dist(&v_vi, &v_enum) <= 1e-7,
            "seed {seed}: VI vs enumeration"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn bellman_operator_is_a_beta_contraction(seed in 0u64..500, beta in 0.1f64..0.99) {
        let mdp = small_mdp(seed, beta);
        let f = random_vec(seed, 4, 10.0);
        let g = random_vec(seed.wrapping_add(1), 4, 10.0);
        let tf = bellman_apply(&mdp, &f).unwrap();
        let tg = bellman_apply(&mdp, &g).unwrap();
        let lhs = sup_dist(&tf, &tg);
        let rhs = beta * sup_dist(&f, &g);
        prop_assert!(lhs <= rhs + 1e-12);
    }

    #[test]
    fn bellman_operator_is_monotone_and_shifts_constants(seed in 0u64..500) {
        let mdp = small_mdp(seed, 0.9);
        let f = random_vec(seed, 4, 10.0);
        let bump = random_vec(seed.wrapping_add(2), 4, 1.0)
            .into_iter()
            .map(f64::abs)
            .collect::<Vec<_>>();
        let g: Vec<f64> = f.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let tf = bellman_apply(&mdp, &f).unwrap();
        let tg = bellman_apply(&mdp, &g).unwrap();
        for (a, b) in tf.iter().zip(&tg) {
            prop_assert!(a <= &(b + 1e-12));
        }
        // T(f + c·1) = Tf + βc·1.
        let c = 3.25;
        let shifted: Vec<f64> = f.iter().map(|x| x + c).collect();
        let t_shifted = bellman_apply(&mdp, &shifted).unwrap();
        for (a, b) in t_shifted.iter().zip(&tf) {
            prop_assert!((a - (b + 0.9 * c)).abs() <= 1e-9);
        }
    }

    #[test]
    fn policy_operator_contracts_and_evaluation_methods_agree(seed in 0u64..500, beta in 0.1f64..0.99) {
        let mdp = small_mdp(seed, beta);
        let pi = random_stochastic_policy(&mdp, seed);
        let f = random_vec(seed, 4, 10.0);
        let g = random_vec(seed.wrapping_add(3), 4, 10.0);
        let tf = bellman_policy_apply(&mdp, &pi, &f).unwrap();
        let tg = bellman_policy_apply(&mdp, &pi, &g).unwrap();
        prop_assert!(sup_dist(&tf, &tg) <= beta * sup_dist(&f, &g) + 1e-12);

        let direct = policy_evaluation(&mdp, &pi, EvalMethod::Direct).unwrap();
        let iterative = policy_evaluation(&mdp, &pi, EvalMethod::Iterative).unwrap();
        prop_assert!(sup_dist(&direct, &iterative) <= 1e-6);
        // Fixed-point residual of the direct solve.
        let image = bellman_policy_apply(&mdp, &pi, &direct).unwrap();
        prop_assert!(sup_dist(&direct, &image) <= 1e-9);
    }

    #[test]
    fn aggregate_operator_contracts_and_bound_holds(seed in 0u64..300) {
        let mdp = random_mdp(9, 2, 0.9, 4, (0.0, 1.0), seed).unwrap();
        // Three aggregates of three consecutive states.
        let agg = AggregationMap::uniform(3, (0..9).map(|s| s / 3).collect()).unwrap();
        let f = random_vec(seed, 3, 10.0);
        let g = random_vec(seed.wrapping_add(4), 3, 10.0);
        let wf = aggregate_operator_apply(&mdp, &agg, &f).unwrap();
        let wg = aggregate_operator_apply(&mdp, &agg, &g).unwrap();
        prop_assert!(sup_dist(&wf, &wg) <= 0.9 * sup_dist(&f, &g) + 1e-12);

        let (f_star, stats) = solve_aggregate(&mdp, &agg, 1e-10).unwrap();
        prop_assert!(stats.converged);
        let (v, _) = value_iteration(&mdp, &vec![0.0; 9], 1e-10, 100_000).unwrap();
        let report = aggregation_error_bound(&mdp, &agg, &v, &f_star).unwrap();
        prop_assert!(report.max_deviation <= report.bound + 1e-9);
    }

    #[test]
    fn average_reward_identities(seed in 0u64..300) {
        // Dense support makes every policy ergodic.
        let mdp = random_mdp(4, 2, 0.0, 4, (-1.0, 1.0), seed).unwrap();
        let pi = random_stochastic_policy(&mdp, seed);
        let pi2 = random_stochastic_policy(&mdp, seed.wrapping_add(7));
        let sol = differential_values(&mdp, &pi, 0).unwrap();
        prop_assert!((sol.rho - average_reward(&mdp, &pi).unwrap()).abs() <= 1e-10);
        prop_assert!(sol.h[0].abs() <= 1e-12);
        // Σ_a π(s,a) A_π(s,a) = 0 and max_a A_π(s,a) ≥ 0.
        for s in 0..4 {
            let mut mean = 0.0;
            let mut best: f64 = f64::NEG_INFINITY;
            for (k, &a) in mdp.feasible(s).iter().enumerate() {
                mean += pi.probs[s][a] * sol.advantage.rows()[s][k];
                best = best.max(sol.advantage.rows()[s][k]);
            }
            prop_assert!(mean.abs() <= 1e-10);
            prop_assert!(best >= -1e-12);
        }
        let (lhs, rhs) = performance_difference(&mdp, &pi, &pi2).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9);
    }

    #[test]
    fn simplex_projection_laws(v in proptest::collection::vec(-5.0f64..5.0, 1..6)) {
        let p = simplex_project_row(&v);
        prop_assert!(p.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        let pp = simplex_project_row(&p);
        for (a, b) in pp.iter().zip(&p) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
        // No point of the simplex is closer to v than the projection.
        for i in 0..v.len() {
            let mut vertex = vec![0.0; v.len()];
            vertex[i] = 1.0;
            let d_proj: f64 = p.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
            let d_vert: f64 = vertex.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum();
            prop_assert!(d_proj <= d_vert + 1e-9);
        }
    }

    #[test]
    fn fsd_is_reflexive_and_respects_upward_shifts(
        w in proptest::collection::vec(0.05f64..1.0, 3..6),
    ) {
        let total: f64 = w.iter().sum();
        let d: Vec<f64> = w.iter().map(|x| x / total).collect();
        prop_assert_eq!(fsd_compare(&d, &d).unwrap(), FsdOrder::Equal);
        // Moving mass from the bottom cell to the top cell dominates.
        let mut up = d.clone();
        let shift = up[0] / 2.0;
        up[0] -= shift;
        *up.last_mut().unwrap() += shift;
        prop_assert_eq!(fsd_compare(&up, &d).unwrap(), FsdOrder::Dominates);
        prop_assert_eq!(fsd_compare(&d, &up).unwrap(), FsdOrder::Dominated);
    }
}

#[test]
fn robbins_monro_verdicts_by_schedule_family() {
    let horizon = 200_000;
    let constant = robbins_monro_check(&StepSchedule::Constant(0.1), horizon).unwrap();
    assert!(constant.sum_diverges && !constant.sum_sq_converges);
    let harmonic = robbins_monro_check(&StepSchedule::Harmonic { c: 1.0 }, horizon).unwrap();
    assert!(harmonic.sum_diverges && harmonic.sum_sq_converges);
    let slow = robbins_monro_check(&StepSchedule::Power { c: 1.0, p: 0.4 }, horizon).unwrap();
    assert!(!slow.sum_sq_converges);
    let fast = robbins_monro_check(&StepSchedule::Power { c: 1.0, p: 1.5 }, horizon).unwrap();
    assert!(!fast.sum_diverges && fast.sum_sq_converges);
}

#[test]
fn value_iteration_respects_error_bound_from_zero_start() {
    // d(V_out, V*) ≤ requested tolerance, with V* from a much tighter run.
    for seed in 0..6 {
        let mdp = small_mdp(seed, 0.95);
        let (v_star, _) = value_iteration(&mdp, &vec![0.0; 4], 1e-12, 1_000_000).unwrap();
        for tol in [1e-4, 1e-6, 1e-8] {
            let (v, stats) = value_iteration(&mdp, &vec![0.0; 4], tol, 1_000_000).unwrap();
            assert!(stats.converged);
            assert!(sup_dist(&v, &v_star) <= tol, "seed {seed}, tol {tol}");
        }
    }
}
