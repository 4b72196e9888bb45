use std::fs;

use assert_cmd::Command;

fn sle() -> Command {
    let mut c = Command::cargo_bin("sle-lab").unwrap();
    c.env_remove("SLE_LAB_SEED");
    c
}

fn stdout(c: &mut Command) -> String {
    String::from_utf8(c.assert().success().get_output().stdout.clone()).unwrap()
}

#[test]
fn left_passage_at_right_angle_is_one_half() {
    let out = stdout(sle().args(["exact", "leftpass", "--kappa", "8/3", "--theta", "pi/2"]));
    assert_eq!(out.trim(), "p = 0.500000000000");
}

#[test]
fn restriction_value_is_printed_to_twelve_digits() {
    let out = stdout(sle().args(["exact", "hit83", "--r", "0.25"]));
    assert_eq!(out.trim(), "p = 0.0395338848217");
}

#[test]
fn constants_report_a_unit_side() {
    let out = stdout(sle().args(["exact", "constants", "--kappa", "6"]));
    assert!(out.contains("side = 1.00000000000"), "{out}");
    assert!(out.contains("c_tilde = "), "{out}");
}

#[test]
fn domain_and_regime_errors_exit_2() {
    sle().args(["exact", "hit83", "--r", "1.5"]).assert().code(2);
    sle().args(["exact", "interval", "--kappa", "2", "--r", "0.1"]).assert().code(2);
    sle().args(["exact", "leftpass", "--kappa", "8.5", "--theta", "1"]).assert().code(2);
}

#[test]
fn zero_noise_trace_is_vertical() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    sle()
        .args(["trace", "--kappa", "6", "--zero-noise", "--dt", "0.01", "--horizon", "1", "--out"])
        .arg(&path)
        .assert()
        .success();
    let text = fs::read_to_string(&path).unwrap();
    let last = text.lines().last().unwrap();
    let cols: Vec<f64> = last.split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(cols[3], 0.0);
    assert!((cols[4] - 2.0).abs() < 1e-12, "{last}");
}

#[test]
fn traces_repeat_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = dir.path().join(name);
        sle().args(["trace", "--kappa", "6", "--dt", "1e-3", "--horizon", "1", "--out"]).arg(&path).env("SLE_LAB_SEED", "9").assert().success();
        fs::read(path).unwrap()
    };
    assert_eq!(run("a.csv"), run("b.csv"));
}

#[test]
fn malformed_config_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    let out = dir.path().join("out.csv");
    fs::write(&config, r#"{"schema_version": 1, "kappa": "8/3", "n": "many"}"#).unwrap();
    sle().args(["experiment", "semicircle", "--config"]).arg(&config).arg("--out").arg(&out).assert().code(2);
    assert!(!out.exists());
    fs::write(&config, r#"{"schema_version": 7, "kappa": 6}"#).unwrap();
    sle().args(["experiment", "interval", "--config"]).arg(&config).arg("--out").arg(&out).assert().code(2);
    assert!(!out.exists());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    fs::write(&config, r#"{"schema_version": 1, "kind": "interval", "kappa": 6, "n": 150, "seed": 4}"#).unwrap();
    let out = stdout(sle().args(["experiment", "--n", "120", "--config"]).arg(&config));
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "interval");
    assert_eq!(row[4], "120");
}

#[test]
fn suite_output_does_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let run = |workers: &str| {
        let path = dir.path().join(format!("suite{workers}.json"));
        let code = sle()
            .args(["experiment", "oracle-suite", "--kappa", "6", "--n", "100", "--seed", "3", "--format", "json"])
            .args(["--workers", workers, "--out"])
            .arg(&path)
            .output()
            .unwrap()
            .status
            .code();
        assert!(matches!(code, Some(0) | Some(4)), "{code:?}");
        fs::read(path).unwrap()
    };
    assert_eq!(run("1"), run("2"));
}

#[test]
fn missed_comparison_exits_4() {
    // stopping at capacity 1 leaves a third of the landings uncounted
    sle()
        .args(["experiment", "interval", "--kappa", "6", "--r", "0.1", "--n", "1000", "--horizon", "1", "--seed", "1"])
        .assert()
        .code(4);
}
