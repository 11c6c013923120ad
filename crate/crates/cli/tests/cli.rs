use std::path::Path;
use std::process::{Command, Output};

fn shlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shlab"))
        .arg("--out-dir")
        .arg(dir.join("out"))
        .args(args)
        .env("SHLAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join("out").join(name)).unwrap()
}

#[test]
fn sample_commands_write_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = shlab(dir.path(), &["sample", "inputs", "--lambdas", "0.3,0.2", "--lo", "-2", "--hi", "7"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path(), "inputs.csv");
    assert_eq!(csv.lines().next(), Some("site,x_1,x_2"));
    assert_eq!(csv.lines().count(), 11);
    assert!(csv.lines().nth(1).unwrap().starts_with("-2,"));

    let o = shlab(dir.path(), &["sample", "sh", "--drifts", "-1,0,1", "--half-width", "1", "--step", "0.5"]);
    assert!(o.status.success());
    let csv = read(dir.path(), "sh.csv");
    assert_eq!(csv.lines().next(), Some("x,line_1,line_2,line_3"));
    assert!(csv.lines().any(|l| l == "0,0,0,0"));
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["files"], serde_json::json!(["sh.csv", "sh.json"]));
}

#[test]
fn same_seed_same_sample() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert!(shlab(d.path(), &["sample", "fm", "--lambdas", "0.2,0.2,0.1", "--hi", "300", "--seed", "4"]).status.success());
    }
    assert_eq!(read(a.path(), "fm.csv"), read(b.path(), "fm.csv"));
}

#[test]
fn verify_writes_reports_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = shlab(dir.path(), &["verify", "lemma-cl", "--reps", "30", "--max-len", "40", "--exhaustive-len", "4"]);
    assert!(o.status.success());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("PASS lemma_cl"));
    assert!(stdout.ends_with("1 reports, 0 failed\n"));
    let reports = read(dir.path(), "verify.jsonl");
    let first: serde_json::Value = serde_json::from_str(reports.lines().next().unwrap()).unwrap();
    assert_eq!(first["passed"], true);

    // right jumps do not preserve the left-jump multiline measure
    let o = shlab(dir.path(), &["verify", "stationarity", "--len", "300", "--t", "100", "--reps", "10", "--direction", "right"]);
    assert_eq!(o.status.code(), Some(1));
    let manifest: serde_json::Value = serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["reports"]["failed"], serde_json::json!(["stationarity"]));
}

#[test]
fn config_file_replaces_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("jumps.json");
    std::fs::write(&cfg, r#"{"lo":-1,"hi":1,"step":0.5,"x0":1,"n":1000,"reps":10,"seed":3,"rel_tol":10,"margin":null}"#).unwrap();
    let o = shlab(dir.path(), &["--config", cfg.to_str().unwrap(), "converge", "jumps"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report: serde_json::Value = serde_json::from_str(read(dir.path(), "converge.jsonl").lines().next().unwrap()).unwrap();
    assert_eq!(report["metadata"]["grid_points"], "5");
    assert_eq!(report["metadata"]["reps"], "10");
}

#[test]
fn bad_input_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = shlab(dir.path(), &["sample", "inputs", "--lambdas", "0.7,0.6"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let o = shlab(dir.path(), &["--config", "/nonexistent.json", "verify", "burke"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn quick_run_all_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = shlab(dir.path(), &["run-all", "--quick", "--seed", "3"]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success(), "{stdout}");
    assert!(stdout.trim_end().ends_with("0 failed"));
}
