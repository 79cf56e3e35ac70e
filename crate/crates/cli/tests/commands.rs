use std::fs;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_rankin");

fn rankin(dir: &std::path::Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn ap_writes_and_reuses_cache() {
    let d = tempfile::tempdir().unwrap();
    let o = rankin(d.path(), &["--set", "p_max=100", "ap"]);
    assert!(o.status.success());
    let path = d.path().join("ap_11a.csv");
    let first = fs::read(&path).unwrap();
    assert_eq!(String::from_utf8_lossy(&first).lines().count(), 26);
    assert!(String::from_utf8_lossy(&first).starts_with("p,kind,ap\n2,good,-2\n"));

    let o = rankin(d.path(), &["--set", "p_max=100", "ap"]);
    assert!(stdout(&o).contains("cached"));
    assert_eq!(fs::read(&path).unwrap(), first);

    let o = rankin(d.path(), &["--set", "p_max=30", "ap"]);
    assert!(stdout(&o).contains("ap_11a.csv: cached, 25 rows"));
    assert_eq!(fs::read(&path).unwrap(), first);

    let o = rankin(d.path(), &["--set", "p_max=200", "ap"]);
    assert!(stdout(&o).contains("ap_11a.csv: wrote 46 rows"));
}

#[test]
fn config_file_and_usage_errors() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("job.cfg"), "curve1 = 37a\np_max = 50\n").unwrap();
    let o = rankin(d.path(), &["--config", "job.cfg", "ap"]);
    assert!(o.status.success());
    assert!(d.path().join("ap_37a.csv").exists());

    fs::write(d.path().join("bad.cfg"), "colour = blue\n").unwrap();
    assert_eq!(rankin(d.path(), &["--config", "bad.cfg", "ap"]).status.code(), Some(2));
    assert_eq!(rankin(d.path(), &["--config", "missing.cfg", "ap"]).status.code(), Some(2));
    assert_eq!(rankin(d.path(), &["frobnicate"]).status.code(), Some(2));
    assert_eq!(rankin(d.path(), &["verify", "--only", "nothing"]).status.code(), Some(2));
    assert_eq!(rankin(d.path(), &["lvalue", "--s", "2", "--pair", "1,7"]).status.code(), Some(2));
}

#[test]
fn lvalue_rows_per_pipeline() {
    let d = tempfile::tempdir().unwrap();
    let o = rankin(d.path(), &["lvalue", "--s", "2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "pipeline,s,value,error");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("direct-series,2,"));
    assert!(rows[2].starts_with("afe,2,"));
    let v: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!((v[0] - v[1]).abs() < 1e-8 * v[1].abs());

    let o = rankin(d.path(), &["lvalue", "--s", "1", "--pair", "1,1"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("warning: L(11a x 11a, s) has a pole at s = 1"));
}

#[test]
fn lvalue_at_zero_has_afe_and_regulator_rows() {
    let d = tempfile::tempdir().unwrap();
    let o = rankin(d.path(), &["--set", "depth=0", "lvalue", "--s", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("afe,0,") && rows[1].starts_with("regulator,0,"));
    let v: Vec<f64> = rows.iter().map(|r| r.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!((v[0] - v[1]).abs() < 1e-6 * v[0].abs(), "{v:?}");
}

#[test]
fn verify_only_and_indent_give_same_content() {
    let d = tempfile::tempdir().unwrap();
    let o = rankin(d.path(), &["--out", "plain", "verify", "--only", "kronecker"]);
    assert!(o.status.success());
    assert!(stdout(&o).lines().all(|l| l.contains("kronecker")));
    let o = rankin(d.path(), &["--out", "pretty", "verify", "--only", "kronecker", "--json-indent", "2"]);
    assert!(o.status.success());
    let plain = fs::read_to_string(d.path().join("plain/report.json")).unwrap();
    let pretty = fs::read_to_string(d.path().join("pretty/report.json")).unwrap();
    assert_ne!(plain, pretty);
    let a: serde_json::Value = serde_json::from_str(&plain).unwrap();
    let b: serde_json::Value = serde_json::from_str(&pretty).unwrap();
    assert_eq!(a, b);
    assert_eq!(a["groups"], serde_json::json!(["kronecker"]));

    let o = rankin(d.path(), &["--out", "pretty", "report"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 5);
}

#[test]
fn eisenstein_prints_both_evaluators() {
    let d = tempfile::tempdir().unwrap();
    let o = rankin(d.path(), &["eisenstein", "--x", "0.1", "--y", "1.2", "--s", "2"]);
    let text = stdout(&o);
    let v: Vec<f64> = text.lines().skip(1).map(|r| r.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(v.len(), 2);
    assert!((v[0] - v[1]).abs() < 1e-12 * v[0]);
    assert_eq!(rankin(d.path(), &["eisenstein", "--x", "0", "--y", "-1", "--s", "2"]).status.code(), Some(2));
}

#[test]
fn petersson_of_distinct_newforms_vanishes() {
    let d = tempfile::tempdir().unwrap();
    let o = rankin(d.path(), &["--set", "depth=0", "petersson", "--pair", "1,3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "11ax15a");
    assert_eq!(row[1], "165");
    let re: f64 = row[2].parse().unwrap();
    assert!(re.abs() < 1e-8);
}
