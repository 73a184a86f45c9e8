use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn qharm(cache: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qharm")).args(args).env("QHARM_CACHE_DIR", cache).output().expect("binary runs")
}

fn lines(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).expect("JSON line")).collect()
}

/// Every line with the wall time removed.
fn payload(out: &Output) -> Vec<Value> {
    lines(out)
        .into_iter()
        .map(|mut v| {
            v.as_object_mut().unwrap().remove("wall_time_ms");
            v
        })
        .collect()
}

#[test]
fn decay_rows_for_cone_and_plane() {
    let dir = tempfile::tempdir().unwrap();
    let out = qharm(dir.path(), &["decay", "--primes", "3..23"]);
    assert!(out.status.success());
    let rows = lines(&out);
    assert_eq!(rows.len(), 9);
    for row in &rows[..8] {
        assert_eq!(row["record"], "row");
        assert_eq!(row["plane_free"], true);
        assert!((row["constant"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    }
    assert_eq!(rows[8]["record"], "summary");
    assert_eq!(rows[8]["seed"], 0);

    let out = qharm(dir.path(), &["decay", "--poly", "x1 + x2 + x3", "--primes", "5,7"]);
    for row in &lines(&out)[..2] {
        assert_eq!(row["plane_free"], false);
        assert_eq!(row["plane_normal"], serde_json::json!([1, 1, 1]));
        assert!((row["constant"].as_f64().unwrap() - row["p"].as_f64().unwrap()).abs() < 1e-9);
    }
}

#[test]
fn reports_are_deterministic_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["distance", "--poly", "x1^2 + x2^2 + x3^2", "--primes", "5,7", "--trials", "10", "--seed", "7"];
    let first = qharm(dir.path(), &args);
    assert!(first.status.success());
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
    let cached = qharm(dir.path(), &args);
    let mut uncached_args = args.to_vec();
    uncached_args.push("--no-cache");
    let fresh = qharm(dir.path(), &uncached_args);
    assert_eq!(payload(&first), payload(&cached));
    assert_eq!(payload(&first), payload(&fresh));
    let rows = lines(&first);
    assert_eq!(rows[0]["identity_ok"], true);
    assert!(rows[0]["min_ratio"].as_f64().unwrap() >= 0.2);

    let other = qharm(
        dir.path(),
        &["distance", "--poly", "x1^2 + x2^2 + x3^2", "--primes", "5,7", "--trials", "10", "--seed", "8"],
    );
    assert_ne!(lines(&other)[0]["config_hash"], rows[0]["config_hash"]);
}

#[test]
fn corrupted_cache_is_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["scan", "--poly", "x1^2 + x2^2 + x3^2", "--primes", "5,7"];
    let first = qharm(dir.path(), &args);
    let entry = std::fs::read_dir(dir.path()).unwrap().next().unwrap().unwrap().path();
    std::fs::write(&entry, b"garbage").unwrap();
    let again = qharm(dir.path(), &args);
    assert!(again.status.success());
    assert_eq!(payload(&first), payload(&again));
    let repaired: Value = serde_json::from_slice(&std::fs::read(&entry).unwrap()).unwrap();
    assert!(repaired["rows"].is_array());
}

#[test]
fn scan_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = qharm(
        dir.path(),
        &["scan", "--poly", "x1^2 + x2^2 + x3^2", "--primes", "5,7", "--format", "csv", "--no-cache"],
    );
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = text.lines();
    assert_eq!(rows.next(), Some("p,d,s,branch,normalized_max"));
    let t0: Vec<f64> = rows
        .filter(|l| l.split(',').nth(3) == Some("t0"))
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(t0.len(), 2);
    assert!(t0.iter().all(|v| (v - 1.0).abs() < 1e-9));
}

#[test]
fn report_goes_to_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.jsonl");
    let out = qharm(
        dir.path(),
        &["averaging", "--p", "1", "--r", "2", "--primes", "5..13", "--budget", "1", "--out", path.to_str().unwrap()],
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let summary: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(summary["region"], "outside");
    assert!((summary["spike"]["slope"].as_f64().unwrap() - 0.5).abs() < 0.1);
}

#[test]
fn extension_rows_report_necessary_conditions() {
    let dir = tempfile::tempdir().unwrap();
    let out = qharm(dir.path(), &["extension", "--primes", "5..13", "--budget", "3", "--no-cache"]);
    assert!(out.status.success());
    let rows = lines(&out);
    for row in &rows[..4] {
        assert_eq!(row["necessary_conditions"], "satisfied");
        assert!(row["lower_bound"].as_f64().unwrap() <= 3.0);
    }
    assert!(rows[4]["growth"]["slope"].as_f64().unwrap().abs() < 0.1);
    assert!(rows[4]["constant_witness"]["slope"].as_f64().unwrap().abs() < 0.1);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["decay", "--poly", "x1^2 + 1", "--primes", "5"],
        &["scan", "--poly", "x1^2 + x2^2 + x3^2 + x4^2 + x5^2", "--dim", "5", "--primes", "101"],
        &["decay", "--primes", "4,5"],
        &["distance", "--trials", "0", "--primes", "5"],
        &["extension", "--p", "1/2", "--primes", "5"],
        &["distance", "--counterexample", "--primes", "5"],
        &["verify", "--criteria", "13"],
        &["frobnicate"],
    ];
    for args in cases {
        let out = qharm(dir.path(), args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn verify_runs_selected_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let out = qharm(dir.path(), &["verify", "--criteria", "3,4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().filter(|l| l.starts_with("[PASS]")).count() == 2, "{text}");
    assert!(text.contains("2 of 2 criteria passed"));
}
