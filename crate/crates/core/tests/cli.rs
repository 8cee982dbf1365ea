use std::path::PathBuf;
use std::process::{Command, Output};

fn sim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osa-sim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn scenario(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

#[test]
fn lists_presets() {
    let out = sim(&["--list-presets"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.contains("throughput-c4"));
}

#[test]
fn csv_goes_to_stdout_and_summary_to_stderr() {
    let out = sim(&[
        "--scenario",
        "scenario1",
        "--horizon",
        "300",
        "--runs",
        "2",
        "--stride",
        "100",
    ]);
    assert!(out.status.success());
    let csv = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0].split(',').count(), 8);
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,0,0,"));
    let summary = String::from_utf8(out.stderr).unwrap();
    assert!(summary.contains("round-robin"), "{summary}");
}

#[test]
fn scenario_file_and_per_user_output() {
    let dir = tempfile::tempdir().unwrap();
    let main = dir.path().join("main.csv");
    let per_user = dir.path().join("users.csv");
    let out = sim(&[
        "--scenario",
        &scenario("heterogeneous.toml"),
        "--horizon",
        "1000",
        "--out",
        main.to_str().unwrap(),
        "--per-user-out",
        per_user.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(std::fs::read_to_string(&main).unwrap().lines().count(), 4);
    let users = std::fs::read_to_string(&per_user).unwrap();
    assert!(users.starts_with("slot,regret_user0,regret_user1,regret_user2\n"));
}

#[test]
fn overrides_switch_policy() {
    let out = sim(&[
        "--scenario",
        "throughput-c4",
        "--policy",
        "random",
        "--users",
        "2",
        "--horizon",
        "200",
        "--runs",
        "2",
        "--stride",
        "200",
    ]);
    assert!(out.status.success());
    let summary = String::from_utf8(out.stderr).unwrap();
    assert!(
        summary.contains("| random |") && summary.contains("K=2"),
        "{summary}"
    );
}

#[test]
fn config_errors_exit_nonzero() {
    let out = sim(&["--scenario", &scenario("too-many-users.toml")]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("more users than channels"), "{err}");

    let out = sim(&["--scenario", "scenario1", "--learning", "individual"]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr)
        .unwrap()
        .contains("policy.period"));

    let out = sim(&["--scenario", "no-such-preset"]);
    assert!(!out.status.success());

    let out = sim(&["--policy", "softmax"]);
    assert!(!out.status.success());
}
