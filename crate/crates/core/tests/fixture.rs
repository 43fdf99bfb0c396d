//! Reproduction of the six-BS reference serving-details table from the
//! pinned-rate fixture.

use std::collections::BTreeSet;

use mecplan_core::io::{load_instance_str, render_path, report_file, report_to_csv};
use mecplan_core::milp::{SolveLimits, SolveStatus};
use mecplan_core::pipeline::{run_two_step, Policy};
use mecplan_core::{validate_instance, validate_plan, ServingLocation};

const FIXTURE: &str = include_str!("../fixtures/table2.toml");

/// Reference per-task serving times (seconds) for the fixture scenario.
const REFERENCE: [(usize, f64); 10] = [
    (1, 1.27),
    (2, 0.0),
    (3, 0.0),
    (4, 0.0),
    (5, 1.34),
    (6, 0.43),
    (7, 1.86),
    (8, 0.61),
    (9, 0.20),
    (10, 1.95),
];

#[test]
fn fixture_reproduces_reference_serving_details() {
    let inst = load_instance_str(FIXTURE).unwrap();
    assert!(validate_instance(&inst).is_empty());

    let result = run_two_step(&inst, Policy::Hbh, &SolveLimits::default()).unwrap();
    assert_eq!(result.outcome.status, SolveStatus::Optimal);

    let g = inst.link_graph().unwrap();
    assert!(validate_plan(&inst, &g, &result.plan).is_empty());

    let report = &result.optimized_report;

    // Exactly three tasks served at their origin with zero latency.
    let zero_local: BTreeSet<usize> = report
        .tasks
        .iter()
        .filter(|t| t.latency_hbh == 0.0 && t.assignment == ServingLocation::Bs(t.origin))
        .map(|t| t.id)
        .collect();
    assert_eq!(zero_local, BTreeSet::from([2, 3, 4]));

    // Exactly four tasks sent to the cloud.
    let cloud: BTreeSet<usize> = report
        .tasks
        .iter()
        .filter(|t| t.assignment == ServingLocation::Cloud)
        .map(|t| t.id)
        .collect();
    assert_eq!(cloud, BTreeSet::from([5, 7, 9, 10]));

    // Task 9 pays exactly the wired cloud latency.
    let t9 = &report.tasks[8];
    assert!((t9.latency_hbh - 0.20).abs() <= 1e-6, "{}", t9.latency_hbh);

    // Every optimized latency within 0.01 s of the reference value.
    for (id, expect) in REFERENCE {
        let got = report.tasks[id - 1].latency_hbh;
        assert!(
            (got - expect).abs() <= 0.01,
            "task {id}: got {got}, reference {expect}"
        );
    }

    // The optimized allocation dominates the equal-share baseline.
    assert!(report.total_hbh <= result.equal_share_report.total_hbh + 1e-12);
    // Step-1 objective agrees with the equal-share evaluation.
    let obj = result.outcome.objective_value.unwrap();
    assert!((obj - result.equal_share_report.total_hbh).abs() <= 1e-9 * (1.0 + obj));
}

#[test]
fn fixture_report_renders_table_rows() {
    let inst = load_instance_str(FIXTURE).unwrap();
    let result = run_two_step(&inst, Policy::Hbh, &SolveLimits::default()).unwrap();
    let file = report_file(&inst, &result);
    let csv = report_to_csv(&file);

    // Task 9 goes straight to the cloud over the wired pseudo-interface.
    assert!(csv.contains("9,0.90,6,6(3)→Cloud,0.20"), "{csv}");
    // Locally served tasks show the asterisk path.
    assert!(csv.contains("2,1.60,1,*,0.00"), "{csv}");
    // Task 1 crosses one mmWave hop into the BS 3 server.
    let row1 = csv.lines().nth(1).unwrap();
    assert!(row1.starts_with("1,1.28,2,2("), "{row1}");
    assert!(row1.contains("→3("), "{row1}");
    assert!(row1.ends_with(",1.27"), "{row1}");

    // Rendered path of a cloud task includes its mmWave hop.
    let t5 = &result.plan.routes[4];
    let rendered = render_path(&inst, &t5.path, t5.cloud_entry);
    assert!(rendered.contains("→6("), "{rendered}");
    assert!(rendered.ends_with("6(3)→Cloud"), "{rendered}");
}
