use std::process::Command;

fn soen_tx(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_soen-tx")).args(args).output().unwrap()
}

#[test]
fn figure_writes_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig4c.csv");
    let out = soen_tx(&["figure", "fig4c", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("I_LED_uA,C_fF,N_ph,error\n"));
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn chain_reports_json_for_the_defaults() {
    let out = soen_tx(&["chain", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["n_ph"].as_f64().unwrap() > 3000.0);
    assert_eq!(out.stdout, soen_tx(&["chain", "--seed", "5"]).stdout);
}

#[test]
fn config_errors_name_the_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    std::fs::write(&path, "circuit.I_LED = 10 uV\n").unwrap();
    let out = soen_tx(&["led", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("circuit.I_LED"));
    let out = soen_tx(&["figure", "fig99"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no such figure dataset"));
}

#[test]
fn config_file_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, "# shorter pulse\ncircuit.t_on = 2 ns\n").unwrap();
    let short = soen_tx(&["led", "--config", path.to_str().unwrap()]);
    let long = soen_tx(&["led"]);
    let n = |o: &std::process::Output| {
        serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap()["n_ph"].as_f64().unwrap()
    };
    assert!(n(&short) < n(&long));
}

#[test]
fn unreachable_sweep_points_do_not_abort() {
    let out = soen_tx(&[
        "sweep",
        "--target",
        "htron_match",
        "--axis",
        "target.t_above=5,100000 ns",
        "--output",
        "tau_nt",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[2].contains("NaN"));
    assert!(lines[2].ends_with("insufficient drive amplitude"));
}

#[test]
fn validate_reports_every_criterion() {
    let out = soen_tx(&["validate", "--format", "json"]);
    let checks: Vec<serde_json::Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(checks.len(), 21);
    let failed = checks.iter().filter(|c| !c["passed"].as_bool().unwrap()).count();
    assert_eq!(out.status.code(), Some(if failed == 0 { 0 } else { 4 }));
}
