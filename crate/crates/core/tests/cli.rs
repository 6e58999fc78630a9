use std::process::{Command, Output};

fn fmpc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fmpc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn worked_example_passes() {
    let o = fmpc(&["paper-example", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["display_re"].as_f64().unwrap() + 54.08).abs() < 1e-6);
    assert_eq!(v["verdict"], "PASS");
}

#[test]
fn identity_check_passes() {
    let o = fmpc(&["verify-identity", "--n", "5", "--trials", "20"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("PASS"));
}

#[test]
fn residual_diagnosis_reports_both_values() {
    let o = fmpc(&["diagnose-residual", "--n", "4", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("oracle"), "{text}");
}

#[test]
fn correct_runs_exit_zero() {
    for sub in ["run-two-party", "run-n-party", "run-multi-node", "run-baseline"] {
        let mut args = vec![sub, "--seed", "4"];
        if sub == "run-multi-node" {
            args.extend(["--iota", "1"]);
        }
        let o = fmpc(&args);
        assert_eq!(o.status.code(), Some(0), "{sub}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn wrong_display_exits_one() {
    let o = fmpc(&["run-n-party", "--n", "5", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(fmpc(&[]).status.code(), Some(2));
    assert_eq!(fmpc(&["run-n-party", "--mode", "cubic"]).status.code(), Some(2));
    assert_eq!(fmpc(&["run-n-party", "--tau", "3/2"]).status.code(), Some(2));
    let o = fmpc(&["approx", "--grid", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn seeded_reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.toml");
    let b = dir.path().join("b.toml");
    for path in [&a, &b] {
        let o = fmpc(&["run-n-party", "--n", "3", "--seed", "42", "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let bytes = std::fs::read(&a).unwrap();
    assert!(!bytes.is_empty());
    assert_eq!(bytes, std::fs::read(&b).unwrap());
}

#[test]
fn scenario_file_and_corruption_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.toml");
    std::fs::write(&path, "protocol = \"two-party\"\nsecrets = [2.2, 4.1]\nweights = [3.0, 5.0]\ny = -9.0\n")
        .unwrap();
    let o = fmpc(&["run-two-party", "--scenario", path.to_str().unwrap(), "--corrupt", "N2", "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["privacy"], "PASS");
    assert_eq!(v["messages"]["node_to_node"], 0);
}
