use std::fs;
use std::process::Command;

use serde_json::Value;

fn qsdc(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qsdc")).args(args).output().expect("binary runs")
}

#[test]
fn help_and_unknown_flags() {
    assert_eq!(qsdc(&["--help"]).status.code(), Some(0));
    assert_eq!(qsdc(&["--nope"]).status.code(), Some(1));
    assert_eq!(qsdc(&["attack", "teleport"]).status.code(), Some(1));
}

#[test]
fn run_with_config_file_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{
            "protocol": {"check_pairs": 300, "epsilon1": 0.8, "epsilon2": 0.8, "message_bits": 8, "check_bits": 2},
            "attack": {"kind": "impersonate-bob"},
            "trials": 12
        }"#,
    )
    .unwrap();
    let out = dir.path().join("trials.json");
    let res = qsdc(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
        "--seed",
        "3",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let rows: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[0]["seed"], 3);
    assert_eq!(rows[0]["attack"], "impersonate-bob");
    assert!(rows.iter().all(|r| r["config_hash"] == rows[0]["config_hash"]));
}

#[test]
fn bad_config_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"protocol": {"check_bits": 3}}"#).unwrap();
    assert_eq!(qsdc(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    fs::write(&cfg, r#"{"protocol": {"unknown": 1}}"#).unwrap();
    assert_eq!(qsdc(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(qsdc(&["run", "--trials", "0"]).status.code(), Some(1));
}

#[test]
fn estimation_failure_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.json");
    fs::write(&cfg, r#"{"protocol": {"check_pairs": 1}, "trials": 5}"#).unwrap();
    let res = qsdc(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("increase the number of check pairs"));
}

#[test]
fn histogram_on_stdout() {
    let res = qsdc(&["histogram", "--message", "11", "--eta", "0", "--config", "/dev/null"]);
    // /dev/null is not valid JSON.
    assert_eq!(res.status.code(), Some(1));
    let res = qsdc(&["histogram", "--message", "11", "--eta", "10"]);
    assert!(res.status.success());
    let text = String::from_utf8(res.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().contains("count_11"));
    assert!(lines.next().unwrap().contains(",11,10,1024,"));
}

#[test]
fn every_subcommand_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let cases: Vec<Vec<String>> = vec![
        vec!["attack".into(), "entangle-measure".into(), "--timing".into(), "after-bob".into(), "--trials".into(), "4".into()],
        vec!["sweep-eta".into(), "--eta-min".into(), "10".into(), "--eta-max".into(), "100".into(), "--step".into(), "45".into(), "--shots".into(), "256".into()],
        vec!["detect".into(), "--l".into(), "1,2".into(), "--trials".into(), "100".into()],
        vec!["chsh".into(), "-d".into(), "400".into(), "--attack".into(), "intercept-resend".into(), "--theta".into(), "1.2".into()],
        vec!["calibrate".into(), "--anchor".into(), "10:0.95".into(), "--shots".into(), "500".into()],
    ];
    for (i, mut args) in cases.into_iter().enumerate() {
        let path = out(&format!("{i}.csv"));
        args.extend(["--out".to_string(), path.clone()]);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let res = qsdc(&refs);
        assert!(res.status.success(), "{args:?}: {}", String::from_utf8_lossy(&res.stderr));
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("config_hash,seed,p_gate,p_readout,px,py,pz,"), "{args:?}");
        assert!(text.lines().count() >= 2);
    }
}
