//! Cross-checks between the independent solution routes: branch-and-bound
//! vs exhaustive enumeration, LP relaxation vs integer optimum, and the
//! row-level feasibility view vs the plan validator.

use mecplan_core::bwalloc::equal_share;
use mecplan_core::milp::{
    brute_force_plan, build_p1, solve_lp_relaxation, solve_p1, Fixings, RelaxOutcome,
    SolveLimits, SolveStatus, DEFAULT_BRUTE_FORCE_BUDGET,
};
use mecplan_core::pipeline::evaluate;
use mecplan_core::testutil::tiny_random_instance;
use mecplan_core::{validate_plan, ServingLocation};

#[test]
fn branch_and_bound_matches_brute_force_on_tiny_instances() {
    for seed in 0..100u64 {
        let inst = tiny_random_instance(seed);
        let g = inst.link_graph().unwrap();
        let model = build_p1(&inst, &g);
        let exact = solve_p1(&model, &SolveLimits::default()).unwrap();
        let brute = brute_force_plan(&inst, &g, DEFAULT_BRUTE_FORCE_BUDGET).unwrap();

        assert_eq!(exact.status, SolveStatus::Optimal, "seed {seed}");
        assert_eq!(brute.status, SolveStatus::Optimal, "seed {seed}");
        let a = exact.objective_value.unwrap();
        let b = brute.objective_value.unwrap();
        assert!(
            (a - b).abs() <= 1e-9 * (1.0 + b.abs()),
            "seed {seed}: solver {a} vs oracle {b}"
        );

        for plan in [exact.plan.as_ref().unwrap(), brute.plan.as_ref().unwrap()] {
            assert!(
                validate_plan(&inst, &g, plan).is_empty(),
                "seed {seed}: plan failed validation"
            );
        }
    }
}

#[test]
fn solver_objective_equals_equal_share_evaluation() {
    for seed in 0..40u64 {
        let inst = tiny_random_instance(seed);
        let g = inst.link_graph().unwrap();
        let model = build_p1(&inst, &g);
        let out = solve_p1(&model, &SolveLimits::default()).unwrap();
        let plan = out.plan.unwrap();
        let alloc = equal_share(&plan, &inst, &g);
        let report = evaluate(&plan, &inst, &g, &alloc).unwrap();
        let obj = out.objective_value.unwrap();
        assert!(
            (obj - report.total_hbh).abs() <= 1e-9 * (1.0 + obj.abs()),
            "seed {seed}: objective {obj} vs evaluation {}",
            report.total_hbh
        );
    }
}

#[test]
fn root_relaxation_bounds_the_optimum() {
    for seed in 0..40u64 {
        let inst = tiny_random_instance(seed);
        let g = inst.link_graph().unwrap();
        let model = build_p1(&inst, &g);
        let root = match solve_lp_relaxation(&model, &Fixings::new()).unwrap() {
            RelaxOutcome::Solved { value, .. } => value,
            RelaxOutcome::Infeasible => panic!("seed {seed}: root LP infeasible"),
        };
        let brute = brute_force_plan(&inst, &g, DEFAULT_BRUTE_FORCE_BUDGET).unwrap();
        let opt = brute.objective_value.unwrap();
        assert!(
            root <= opt + 1e-7 * (1.0 + opt.abs()),
            "seed {seed}: root {root} above optimum {opt}"
        );
    }
}

#[test]
fn fixing_a_solved_plan_reproduces_its_objective() {
    for seed in 0..15u64 {
        let inst = tiny_random_instance(seed);
        let g = inst.link_graph().unwrap();
        let model = build_p1(&inst, &g);
        let out = solve_p1(&model, &SolveLimits::default()).unwrap();
        let plan = out.plan.unwrap();
        let point = model.plan_to_point(&plan);
        let fix = Fixings::from_binary_point(&model, &point);
        match solve_lp_relaxation(&model, &fix).unwrap() {
            RelaxOutcome::Solved { value, .. } => {
                let obj = out.objective_value.unwrap();
                assert!(
                    (value - obj).abs() <= 1e-7 * (1.0 + obj.abs()),
                    "seed {seed}: fixed LP {value} vs plan objective {obj}"
                );
            }
            RelaxOutcome::Infeasible => panic!("seed {seed}: solved plan infeasible as fixing"),
        }
    }
}

/// The plan validator and the model's row evaluation must agree on
/// mutated plans: a mutation passes validation iff its incumbent vector
/// satisfies every model row.
#[test]
fn validator_agrees_with_model_rows_under_mutation() {
    use mecplan_core::plan::{Plan, TaskRoute};
    use rand::Rng;
    use rand::SeedableRng;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0usize;
    for seed in 0..30u64 {
        let inst = tiny_random_instance(seed);
        let g = inst.link_graph().unwrap();
        let model = build_p1(&inst, &g);
        let out = solve_p1(&model, &SolveLimits::default()).unwrap();
        let base = out.plan.unwrap();

        for _ in 0..12 {
            let mut plan: Plan = base.clone();
            match rng.random_range(0..5) {
                0 => {
                    // Flip an assignment to a random BS.
                    let b = rng.random_range(0..plan.routes.len());
                    let target = rng.random_range(1..=inst.n_bs());
                    plan.routes[b].assignment = ServingLocation::Bs(target);
                    plan.routes[b].cloud_entry = None;
                }
                1 => {
                    // Drop the last hop of some path.
                    let b = rng.random_range(0..plan.routes.len());
                    plan.routes[b].path.pop();
                }
                2 => {
                    // Add a random candidate link to a path and establish it.
                    if g.candidate_links.is_empty() {
                        continue;
                    }
                    let b = rng.random_range(0..plan.routes.len());
                    let l = g.candidate_links[rng.random_range(0..g.candidate_links.len())];
                    plan.routes[b].path.push(l);
                    if !plan.links.contains(&l) {
                        plan.links.push(l);
                    }
                }
                3 => {
                    // Establish a random link without carrying any task.
                    if g.candidate_links.is_empty() {
                        continue;
                    }
                    let l = g.candidate_links[rng.random_range(0..g.candidate_links.len())];
                    if !plan.links.contains(&l) {
                        plan.links.push(l);
                    }
                }
                _ => {
                    // Reroute a task straight to the cloud without a path.
                    let b = rng.random_range(0..plan.routes.len());
                    let cloud = inst.cloud_bs_ids()[0];
                    plan.routes[b] = TaskRoute {
                        path: Vec::new(),
                        assignment: ServingLocation::Cloud,
                        cloud_entry: Some(cloud),
                    };
                }
            }
            let violations = validate_plan(&inst, &g, &plan);
            let point = model.plan_to_point(&plan);
            let row_violations = model.violated_rows(&point, 1e-9);
            assert_eq!(
                violations.is_empty(),
                row_violations.is_empty(),
                "seed {seed}: validator said {violations:?}, rows said {row_violations:?}"
            );
            checked += 1;
        }
    }
    assert!(checked > 300);
}

#[test]
fn solver_is_deterministic() {
    use mecplan_core::milp::SolveStatus;
    for seed in [3u64, 17, 28] {
        let inst = tiny_random_instance(seed);
        let g = inst.link_graph().unwrap();
        let model = build_p1(&inst, &g);
        for limits in [
            SolveLimits::default(),
            SolveLimits {
                node_limit: Some(5),
                time_limit: None,
            },
        ] {
            let a = solve_p1(&model, &limits).unwrap();
            let b = solve_p1(&model, &limits).unwrap();
            assert_eq!(a.nodes_explored, b.nodes_explored, "seed {seed}");
            assert_eq!(a.plan, b.plan, "seed {seed}");
            match (a.status, b.status) {
                (SolveStatus::Optimal, SolveStatus::Optimal)
                | (SolveStatus::Infeasible, SolveStatus::Infeasible) => {}
                (SolveStatus::TimeLimitWithGap(x), SolveStatus::TimeLimitWithGap(y)) => {
                    assert_eq!(x, y, "seed {seed}")
                }
                (x, y) => panic!("seed {seed}: {x:?} vs {y:?}"),
            }
        }
    }
}

#[test]
fn empty_task_set_solves_to_empty_plan() {
    let mut inst = tiny_random_instance(0);
    inst.tasks.clear();
    let g = inst.link_graph().unwrap();
    let model = build_p1(&inst, &g);
    let out = solve_p1(&model, &SolveLimits::default()).unwrap();
    assert_eq!(out.status, SolveStatus::Optimal);
    assert_eq!(out.objective_value, Some(0.0));
    let plan = out.plan.unwrap();
    assert!(plan.links.is_empty());
    assert!(plan.routes.is_empty());
}
