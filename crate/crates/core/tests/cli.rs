use std::process::Command;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cbf-transit"))
}

#[test]
fn list_prints_bundled_scenarios() {
    let out = cli().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "robotarium_replication"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn run_writes_outputs_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["run", "motivating_example", "--mode", "discrete", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["trajectory.csv", "events.json", "controls.svg", "workspace.svg", "alpha.svg"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Completed"));
}

#[test]
fn timeout_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args(["run", "motivating_example", "--tmax", "0.5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn infeasible_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("wedge.json");
    std::fs::write(
        &scenario,
        r#"{
  "schema": "cbf-transit/scenario/v1",
  "name": "wedge",
  "system": { "kind": "single_integrator" },
  "workspace": { "min": [-3.0, -2.0], "max": [3.0, 2.0] },
  "reach_barriers": [
    { "shape": "ellipsoid", "name": "hA", "center": [-1.5, 0.0], "semi_axes": [0.3, 0.3] },
    { "shape": "ellipsoid", "name": "hB", "center": [1.5, 0.0], "semi_axes": [0.3, 0.3] }
  ],
  "targets": [ { "name": "A", "barriers": ["hA"] }, { "name": "B", "barriers": ["hB"] } ],
  "tasks": ["A", "B"],
  "composite": { "gamma": 5.0 },
  "transition": { "duration": 0.5 },
  "input_bound": 10.0,
  "t_max": 20.0,
  "initial_state": [-2.5, 0.0]
}"#,
    )
    .unwrap();
    let out = cli().arg("run").arg(&scenario).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(dir.path().join("o/events.json").exists());
}

#[test]
fn bad_scenario_exits_one_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("broken.json");
    std::fs::write(&scenario, r#"{"schema": "cbf-transit/scenario/v1", "bogus": 1}"#).unwrap();
    let out = cli().arg("run").arg(&scenario).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn compare_prints_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli().args(["compare", "motivating_example", "--out"]).arg(dir.path()).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(dir.path().join("comparison.json").exists());
}
