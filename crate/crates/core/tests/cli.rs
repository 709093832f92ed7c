//! End-to-end checks of the `vcst` binary: exit codes, CSV shape, and
//! artifact dumps.

use std::process::Command;

fn vcst() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vcst"))
}

#[test]
fn run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let status = vcst()
        .args([
            "run",
            "--family",
            "small_dense",
            "--planners",
            "vcst,hungarian",
            "--trials",
            "4",
            "--seed",
            "11",
            "--out",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut lines = csv.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# generated "));
    assert_eq!(
        lines.next().unwrap(),
        "family,planner,seed,distance_km,pkgs_per_km,makespan_min,active_makespan_min,n_relays_used,n_waits,wait_time_s"
    );
    assert_eq!(lines.count(), 8, "4 trials x 2 planners");
    let summary = std::fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("sign test vs hungarian"));
}

#[test]
fn config_errors_exit_2() {
    let out = vcst()
        .args(["run", "--family", "no_such_family", "--trials", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = vcst()
        .args(["run", "--family", "small_dense", "--trials", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = vcst()
        .args(["run", "--planners", "gurobi", "--trials", "1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dump_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let status = vcst()
        .args(["dump", "--family", "small_sparse", "--planner", "vcst", "--seed", "5", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    for name in ["scenario.json", "trunk.json", "plan.json", "overlay.svg"] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }
    let svg = std::fs::read_to_string(dir.path().join("overlay.svg")).unwrap();
    assert!(svg.contains(r#"viewBox="0 0 150 150""#));
}
