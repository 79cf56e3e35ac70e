//! Full check suite through the binary: one line per criterion.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_rankin");

/// Wall-time ceiling in seconds per criterion.
const TIME_LIMITS: [(u32, &str, f64); 12] = [
    (1, "ap", 10.0),
    (2, "unfolding", 5.0),
    (3, "epstein", 30.0),
    (4, "epstein-residue", 10.0),
    (5, "kronecker", 20.0),
    (6, "rankin-selberg", 900.0),
    (7, "residue-law", 300.0),
    (8, "class-number", 1800.0),
    (9, "orthogonality", 900.0),
    (10, "pole-orders", 300.0),
    (11, "sym2", 600.0),
    (12, "triple-product", 900.0),
];

fn run_verify(dir: &Path, workers: usize) -> (i32, Vec<u8>, BTreeMap<String, f64>) {
    let out = Command::new(BIN)
        .args(["--workers", &workers.to_string(), "--out"])
        .arg(dir)
        .args(["verify", "--json-indent", "2"])
        .output()
        .expect("binary runs");
    print!("{}", String::from_utf8_lossy(&out.stdout));
    let report = fs::read(dir.join("report.json")).expect("report written");
    let timing: BTreeMap<String, f64> =
        serde_json::from_slice(&fs::read(dir.join("timing.json")).expect("timing written")).expect("timing json");
    (out.status.code().unwrap_or(-1), report, timing)
}

fn main() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (code1, report1, timing) = run_verify(a.path(), 1);
    let (code8, report8, _) = run_verify(b.path(), 8);

    let report: Value = serde_json::from_slice(&report1).unwrap();
    let checks = report["checks"].as_array().unwrap();
    let mut lines = Vec::new();
    let mut all = true;
    for (criterion, group, limit) in TIME_LIMITS {
        let mine: Vec<&Value> = checks.iter().filter(|c| c["criterion"] == criterion).collect();
        let failed: Vec<&str> = mine
            .iter()
            .filter(|c| c["pass"] != true)
            .map(|c| c["name"].as_str().unwrap())
            .collect();
        let secs = timing.get(group).copied().unwrap_or(f64::INFINITY);
        let pass = !mine.is_empty() && failed.is_empty() && secs < limit;
        all &= pass;
        lines.push(format!(
            "criterion {criterion:>2} {group:<16} {} checks={} failed={failed:?} time={secs:.1}s limit={limit}s",
            if pass { "PASS" } else { "FAIL" },
            mine.len()
        ));
    }
    let identical = report1 == report8;
    all &= identical;
    lines.push(format!(
        "criterion 13 determinism      {} workers 1 vs 8 byte-identical={identical}",
        if identical { "PASS" } else { "FAIL" }
    ));
    for l in &lines {
        println!("{l}");
    }
    println!("verify exit codes: workers=1 -> {code1}, workers=8 -> {code8}");
    if !(all && code1 == 0 && code8 == 0) {
        eprintln!("acceptance: FAILED");
        std::process::exit(1);
    }
    println!("acceptance: all 13 criteria passed");
}
