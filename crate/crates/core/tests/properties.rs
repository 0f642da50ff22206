//! Randomized invariants across the solver families.

use otkit_core::entropic::{greenkhorn, sinkhorn, EntropicOptions};
use otkit_core::exact::{enumerate_vertices_oracle, round_to_feasible, solve_exact};
use otkit_core::extensions::{
    multimarginal_entropic, multimarginal_exact, phi_divergence, CostTensor, MultimarginalOptions, PhiDivergenceSpec,
};
use otkit_core::io::{plan_from_json, plan_to_json, problem_from_json, problem_to_json};
use otkit_core::otw::{otw_distance, OtwConfig, TimeSeries};
use otkit_core::{
    c_transform, cbar_transform, duality_gap, transport_cost, CostMatrix, DiscreteMeasure, Problem, TransportPlan,
};
use proptest::prelude::*;

fn probability(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, len).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|x| x / total).collect()
    })
}

/// `(a, b, C)` with sides in `1..=max_side` and costs in `[0, 1)`.
fn instance(max_side: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, CostMatrix)> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(n, m)| {
        (probability(n), probability(m), prop::collection::vec(0.0f64..1.0, n * m))
            .prop_map(move |(a, b, c)| (a, b, CostMatrix::new(n, m, c).unwrap()))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_plans_are_optimal_vertices((a, b, c) in instance(5)) {
        let s = solve_exact(&a, &b, &c).unwrap();
        prop_assert!(s.plan.is_feasible(&a, &b, 1e-12));
        prop_assert!(s.plan.support_size() < a.len() + b.len());
        prop_assert!(duality_gap(&c, &s.plan, &s.duals, &a, &b).unwrap().abs() <= 1e-9);
        let product = TransportPlan::outer(&a, &b);
        prop_assert!(s.cost <= transport_cost(&c, &product).unwrap() + 1e-12);
    }

    #[test]
    fn oracle_agrees_on_small_instances((a, b, c) in instance(4)) {
        let s = solve_exact(&a, &b, &c).unwrap();
        prop_assert!((s.cost - enumerate_vertices_oracle(&a, &b, &c).unwrap()).abs() <= 1e-9);
    }

    #[test]
    fn transposed_instance_has_same_cost((a, b, c) in instance(5)) {
        let forward = solve_exact(&a, &b, &c).unwrap().cost;
        let backward = solve_exact(&b, &a, &c.transpose()).unwrap().cost;
        prop_assert!((forward - backward).abs() <= 1e-12);
    }

    #[test]
    fn rounding_restores_feasibility(
        (a, b, c) in instance(5),
        noise in prop::collection::vec(0.5f64..1.5, 25),
    ) {
        let exact = solve_exact(&a, &b, &c).unwrap();
        let (n, m) = c.shape();
        let perturbed: Vec<f64> = exact.plan.entries().iter().zip(&noise).map(|(p, s)| p * s).collect();
        let noisy = TransportPlan::new(n, m, perturbed).unwrap();
        let rounded = round_to_feasible(&noisy, &a, &b).unwrap();
        prop_assert!(rounded.is_feasible(&a, &b, 1e-12));
        prop_assert!(transport_cost(&c, &rounded).unwrap() >= exact.cost - 1e-9);
        let (rv, cv) = noisy.marginal_violation(&a, &b);
        let bound = transport_cost(&c, &noisy).unwrap() + c.max_abs() * (rv + cv);
        prop_assert!(transport_cost(&c, &rounded).unwrap() <= bound + 1e-12);
        prop_assert_eq!(round_to_feasible(&rounded, &a, &b).unwrap(), rounded);
    }

    #[test]
    fn c_transform_is_idempotent_after_two_steps(
        (_, _, c) in instance(6),
        seed in prop::collection::vec(-3.0f64..3.0, 6),
    ) {
        let w = &seed[..c.rows()];
        let wc = c_transform(w, &c).unwrap();
        let wccc = c_transform(&cbar_transform(&wc, &c).unwrap(), &c).unwrap();
        for (x, y) in wc.iter().zip(&wccc) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn entropic_costs_bound_the_optimum((a, b, c) in instance(5), eta in 0.02f64..1.0) {
        let exact = solve_exact(&a, &b, &c).unwrap().cost;
        let opts = EntropicOptions::new(eta).tol(1e-9);
        for s in [sinkhorn(&a, &b, &c, &opts).unwrap(), greenkhorn(&a, &b, &c, &opts).unwrap()] {
            let rounded = round_to_feasible(&s.plan, &a, &b).unwrap();
            prop_assert!(rounded.is_feasible(&a, &b, 1e-12));
            prop_assert!(transport_cost(&c, &rounded).unwrap() >= exact - 1e-9);
        }
    }

    #[test]
    fn kl_is_nonnegative(a in probability(5), b in probability(5)) {
        let d = phi_divergence(&PhiDivergenceSpec::kl(), &a, &b).unwrap();
        prop_assert!(d >= -1e-15);
        prop_assert!(phi_divergence(&PhiDivergenceSpec::kl(), &a, &a).unwrap().abs() <= 1e-15);
    }

    #[test]
    fn files_round_trip_bit_exactly((a, b, c) in instance(5)) {
        let problem = Problem::new(DiscreteMeasure::new(a.clone()).unwrap(), DiscreteMeasure::new(b.clone()).unwrap(), c.clone()).unwrap();
        let text = problem_to_json(&problem);
        prop_assert_eq!(&problem_from_json(&text).unwrap(), &problem);
        let plan = solve_exact(&a, &b, &c).unwrap().plan;
        let parsed = plan_from_json(&plan_to_json(&plan)).unwrap();
        for (x, y) in parsed.entries().iter().zip(plan.entries()) {
            prop_assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn multimarginal_marginals_hold(
        dims in prop::collection::vec(1usize..=3, 3),
        raw in prop::collection::vec(0.0f64..1.0, 27),
        weights in prop::collection::vec(0.01f64..1.0, 9),
    ) {
        let size: usize = dims.iter().product();
        let tensor = CostTensor::new(dims.clone(), raw[..size].to_vec()).unwrap();
        let mut offset = 0;
        let marginals: Vec<DiscreteMeasure> = dims
            .iter()
            .map(|&d| {
                let w = &weights[offset..offset + d];
                offset += d;
                let total: f64 = w.iter().sum();
                DiscreteMeasure::new(w.iter().map(|x| x / total).collect()).unwrap()
            })
            .collect();
        let (plan, objective) = multimarginal_exact(&tensor, &marginals).unwrap();
        prop_assert!(plan.marginal_violation(&marginals) <= 1e-9);
        prop_assert!((plan.cost(&tensor) - objective).abs() <= 1e-12);
        let entropic = multimarginal_entropic(&tensor, &marginals, &MultimarginalOptions::new(0.5).tol(1e-10)).unwrap();
        prop_assert!(entropic.marginal_violation(&marginals) <= 1e-10);
        prop_assert!(entropic.cost(&tensor) >= objective - 1e-9);
    }

    #[test]
    fn otw_is_symmetric(
        x in prop::collection::vec(-5.0f64..5.0, 1..8),
        y in prop::collection::vec(-5.0f64..5.0, 1..8),
        lambda in 0.0f64..2.0,
        power in 1u32..=2,
    ) {
        let cfg = OtwConfig { temporal_weight: lambda, ground_power: power, ..OtwConfig::default() };
        let (x, y) = (TimeSeries::new("x", x).unwrap(), TimeSeries::new("y", y).unwrap());
        let forward = otw_distance(&x, &y, &cfg).unwrap();
        prop_assert!((forward - otw_distance(&y, &x, &cfg).unwrap()).abs() <= 1e-9);
        prop_assert!(forward >= 0.0);
        prop_assert!(otw_distance(&x, &x, &cfg).unwrap().abs() <= 1e-12);
    }
}
