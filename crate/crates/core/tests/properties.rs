//! Property tests for the structural invariants: link-model monotonicity,
//! allocation scale covariance, metric ordering, and file round-trips.

use proptest::prelude::*;

use mecplan_core::bwalloc::{allocate_p2a, allocate_p2b, equal_share, p2a_link_closed_form};
use mecplan_core::io::{parse_instance_file, serialize_instance_file};
use mecplan_core::milp::{build_p1, solve_p1, SolveLimits};
use mecplan_core::pipeline::evaluate;
use mecplan_core::testutil::{tiny_random_instance, two_bs_instance};
use mecplan_core::{build_link_graph, validate_instance};

proptest! {
    /// Widening the range never removes a candidate link, and moving BSs
    /// closer never lowers their rate.
    #[test]
    fn link_graph_monotonicity(
        distance in 10.0f64..500.0,
        range_lo in 50.0f64..300.0,
        extra in 1.0f64..200.0,
    ) {
        let mut inst = two_bs_instance();
        inst.base_stations[1].x_m = distance;
        inst.link_model.max_range_m = range_lo;
        inst.link_model.reference_distance_m = range_lo.min(100.0) / 2.0;
        let g1 = build_link_graph(&inst).unwrap();

        let mut wider = inst.clone();
        wider.link_model.max_range_m = range_lo + extra;
        let g2 = build_link_graph(&wider).unwrap();
        for l in &g1.candidate_links {
            prop_assert!(g2.candidate_links.contains(l));
        }

        let mut closer = inst.clone();
        closer.base_stations[1].x_m = (distance - extra).max(1.0);
        let g3 = build_link_graph(&closer).unwrap();
        prop_assert!(g3.rate(1, 2) >= g1.rate(1, 2));
    }

    /// Scaling every task size by c scales optimal latencies by c and
    /// leaves the optimal shares unchanged (the weights cancel in the
    /// sqrt-proportional rule).
    #[test]
    fn p2a_scale_covariance(seed in 0u64..30, scale in 0.1f64..8.0) {
        let inst = tiny_random_instance(seed);
        let g = inst.link_graph().unwrap();
        let model = build_p1(&inst, &g);
        let out = solve_p1(&model, &SolveLimits::default()).unwrap();
        let plan = out.plan.unwrap();

        let base_alloc = allocate_p2a(&plan, &inst, &g).unwrap();
        let base_report = evaluate(&plan, &inst, &g, &base_alloc).unwrap();

        let scaled = inst.scale_tasks(scale);
        let scaled_alloc = allocate_p2a(&plan, &scaled, &g).unwrap();
        let scaled_report = evaluate(&plan, &scaled, &g, &scaled_alloc).unwrap();

        for (k, v) in &base_alloc.rho {
            let w = scaled_alloc.rho[k];
            prop_assert!((w - v).abs() <= 1e-9 * v.max(w));
        }
        // Transmission latency scales with the task volume; the wired
        // cloud latency is a constant carried through unchanged.
        let cloud_term: f64 = base_report
            .tasks
            .iter()
            .filter(|t| t.assignment == mecplan_core::ServingLocation::Cloud)
            .map(|t| inst.task(t.id).weight * inst.cloud_latency)
            .sum();
        let a = (base_report.total_hbh - cloud_term) * scale + cloud_term;
        let b = scaled_report.total_hbh;
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs())));
    }

    /// For any allocation, per-task hop-by-hop latency never exceeds the
    /// minimum-rate latency (each hop is at least as fast as the
    /// bottleneck).
    #[test]
    fn metric_ordering(seed in 0u64..40) {
        let inst = tiny_random_instance(seed);
        let g = inst.link_graph().unwrap();
        let model = build_p1(&inst, &g);
        let out = solve_p1(&model, &SolveLimits::default()).unwrap();
        let plan = out.plan.unwrap();
        for alloc in [
            equal_share(&plan, &inst, &g),
            allocate_p2a(&plan, &inst, &g).unwrap(),
            allocate_p2b(&plan, &inst, &g).unwrap(),
        ] {
            let report = evaluate(&plan, &inst, &g, &alloc).unwrap();
            for t in &report.tasks {
                prop_assert!(t.latency_hbh <= t.latency_minr + 1e-9);
            }
        }
    }

    /// Square-root rule invariants: shares are positive, spend exactly the
    /// saturation budget, and order by weight.
    #[test]
    fn p2a_shares_well_formed(
        weights in prop::collection::vec(1e-6f64..1e3, 1..8),
        xi in 0.5f64..1.0,
    ) {
        let rho = p2a_link_closed_form(&weights, xi);
        let sum: f64 = rho.iter().sum();
        prop_assert!(sum <= xi);
        prop_assert!(sum >= xi * (1.0 - 1e-12));
        for (i, a) in weights.iter().enumerate() {
            prop_assert!(rho[i] > 0.0);
            for (j, b) in weights.iter().enumerate() {
                if a < b {
                    prop_assert!(rho[i] <= rho[j] + 1e-15);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Generated instances serialize, reparse, and revalidate cleanly, and
    /// the canonical text form is a fixed point of parse -> serialize.
    #[test]
    fn instance_file_round_trip(seed in 0u64..1000) {
        use mecplan_core::generate::{generate_instance, GeneratorConfig};
        use mecplan_core::io::{from_instance, to_instance};

        let cfg = GeneratorConfig { seed, n_tasks: 5, ..Default::default() };
        let inst = generate_instance(&cfg).unwrap();
        let file = from_instance(&inst, Some(seed));
        let text = serialize_instance_file(&file).unwrap();
        let reparsed = parse_instance_file(&text).unwrap();
        prop_assert_eq!(&reparsed, &file);
        let canonical = serialize_instance_file(&reparsed).unwrap();
        prop_assert_eq!(&canonical, &text);

        let back = to_instance(&reparsed).unwrap();
        prop_assert!(validate_instance(&back).is_empty());
    }
}
