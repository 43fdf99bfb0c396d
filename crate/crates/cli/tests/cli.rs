//! End-to-end tests of the command-line surface, including exit codes.

use std::path::PathBuf;
use std::process::{Command, Output};

fn mecplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mecplan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("mecplan-cli-test-{}-{name}", std::process::id()));
    p
}

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/table2.toml")
}

#[test]
fn generate_validate_solve_round_trip() {
    let inst = tmp("inst.toml");
    let out = mecplan(&[
        "generate",
        "--seed",
        "11",
        "--bs",
        "4",
        "--tasks",
        "3",
        "--cloud",
        "4",
        "--servers",
        "1:2.5",
        "--xi",
        "1.0",
        "--out",
        inst.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");

    let out = mecplan(&["validate", inst.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");

    let report = tmp("report.json");
    let csv = tmp("report.csv");
    let plan = tmp("plan.json");
    let out = mecplan(&[
        "solve",
        inst.to_str().unwrap(),
        "--policy",
        "minR",
        "--out",
        report.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--plan-out",
        plan.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    assert!(csv_text.starts_with("task,size_gb,origin,path,latency_s"));
    assert!(csv_text.contains("total_optimized_minr"));

    // The saved plan validates and re-allocates.
    let out = mecplan(&[
        "validate",
        inst.to_str().unwrap(),
        "--plan",
        plan.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let alloc = tmp("alloc.json");
    let out = mecplan(&[
        "allocate",
        inst.to_str().unwrap(),
        "--plan",
        plan.to_str().unwrap(),
        "--policy",
        "minR",
        "--out",
        alloc.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    assert!(std::fs::read_to_string(&alloc).unwrap().contains("\"rho\""));

    for p in [inst, report, csv, plan, alloc] {
        let _ = std::fs::remove_file(p);
    }
}

#[test]
fn fixture_solve_writes_reference_rows() {
    let csv = tmp("t2.csv");
    let out = mecplan(&[
        "solve",
        fixture_path().to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
        "--out",
        tmp("t2.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.contains("9,0.90,6,6(3)→Cloud,0.20"), "{text}");
    let _ = std::fs::remove_file(csv);
    let _ = std::fs::remove_file(tmp("t2.json"));
}

#[test]
fn malformed_instance_exits_with_validation_code() {
    let bad = tmp("bad.toml");
    std::fs::write(&bad, "schema_version = 1\n").unwrap();
    let out = mecplan(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error"), "{stderr}");
    let _ = std::fs::remove_file(bad);
}

#[test]
fn invalid_structure_reports_violation_codes() {
    let bad = tmp("noreach.toml");
    // No cloud attachment anywhere.
    let text = std::fs::read_to_string(fixture_path())
        .unwrap()
        .replace("cloud_attached = true", "");
    std::fs::write(&bad, text).unwrap();
    let out = mecplan(&["validate", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("cloud"), "{stderr}");
    let _ = std::fs::remove_file(bad);
}

#[test]
fn usage_error_exits_2() {
    let out = mecplan(&["solve", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn time_limited_plan_reports_gap_and_exit_4() {
    // Large enough that a zero-second budget cannot finish the search.
    let inst = tmp("big.toml");
    let out = mecplan(&[
        "generate",
        "--seed",
        "7",
        "--bs",
        "5",
        "--interfaces",
        "3",
        "--tasks",
        "20",
        "--cloud",
        "5",
        "--out",
        inst.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let out = mecplan(&[
        "plan",
        inst.to_str().unwrap(),
        "--time-limit",
        "0s",
        "--out",
        tmp("big-plan.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("gap"), "{stderr}");
    let _ = std::fs::remove_file(inst);
    let _ = std::fs::remove_file(tmp("big-plan.json"));
}

#[test]
fn sweep_and_dot_outputs() {
    let inst = tmp("sw.toml");
    mecplan(&[
        "generate",
        "--seed",
        "3",
        "--bs",
        "3",
        "--tasks",
        "3",
        "--cloud",
        "3",
        "--servers",
        "1:2.0",
        "--xi",
        "1.0",
        "--out",
        inst.to_str().unwrap(),
    ]);
    let out = mecplan(&[
        "sweep-size",
        inst.to_str().unwrap(),
        "--scales",
        "50,100",
    ]);
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("scale_percent,"), "{stdout}");
    assert_eq!(stdout.lines().count(), 3);

    let out = mecplan(&[
        "sweep-infra",
        inst.to_str().unwrap(),
        "--interfaces",
        "1,2",
        "--factors",
        "0,1",
    ]);
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 5);

    let out = mecplan(&["export-dot", inst.to_str().unwrap()]);
    assert!(out.status.success(), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.starts_with("digraph plan {"), "{stdout}");
    let _ = std::fs::remove_file(inst);
}

#[test]
fn lp_export_is_deterministic() {
    let lp1 = tmp("m1.lp");
    let lp2 = tmp("m2.lp");
    for p in [&lp1, &lp2] {
        let out = mecplan(&[
            "plan",
            fixture_path().to_str().unwrap(),
            "--export-lp",
            p.to_str().unwrap(),
            "--out",
            tmp("fp.json").to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{out:?}");
    }
    let a = std::fs::read_to_string(&lp1).unwrap();
    let b = std::fs::read_to_string(&lp2).unwrap();
    assert_eq!(a, b);
    assert!(a.starts_with("\\"));
    assert!(a.contains("Minimize"));
    for p in [lp1, lp2, tmp("fp.json")] {
        let _ = std::fs::remove_file(p);
    }
}
