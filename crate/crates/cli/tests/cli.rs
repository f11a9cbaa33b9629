use serde_json::Value;
use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_critpoints")).args(args).env_remove("CI").env_remove("CRITPOINTS_THREADS").output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let o = run(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

/// Data rows of a CSV with `#` comment lines, header first.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("critpoints-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn density_table_format() {
    let out = stdout(&["mp", "--table", "density", "--grid", "0:4:0.01"]);
    assert!(out.lines().next().unwrap().starts_with("# critpoints "));
    assert!(out.lines().any(|l| l.starts_with("# config: {")));
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["x", "f_mp"]);
    assert_eq!(rows.len(), 402);
    assert_eq!(rows[401][0], "4");
    assert_eq!(rows[401][1].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn quantile_record() {
    let v = json(&["mp", "--s-gamma", "0.5"]);
    assert_eq!(v["gamma"], 0.5);
    assert!((v["s_gamma"].as_f64().unwrap() - 0.6527759416335701).abs() < 1e-9);
    assert!(v["residual"].as_f64().unwrap().abs() < 1e-10);
    assert!(v["version"].as_str().unwrap().starts_with("critpoints "));
}

#[test]
fn rate_curve_is_monotone_from_the_edge() {
    let svg = tmp("rate.svg");
    let out = stdout(&["mp", "--rate", "4:8:0.1", "--svg", svg.to_str().unwrap()]);
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["x", "i_mp"]);
    let ys: Vec<f64> = rows[1..].iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(ys[0], 0.0);
    assert!(ys.windows(2).all(|w| w[1] >= w[0]));
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<polyline"));
    assert!(!run(&["mp", "--rate", "3:8:0.1"]).status.success());
}

#[test]
fn bad_flags_are_usage_errors() {
    for args in [&["mp"][..], &["mp", "--grid", "0:1"], &["estimate", "--N", "3"], &["verify", "--only", "nope"]] {
        let o = run(args);
        assert!(!o.status.success(), "{args:?}");
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn index_m_estimate_matches_its_oracle() {
    let v = json(&["estimate", "--m", "1", "--N", "2", "--k", "1", "--window", "0:inf", "--n", "100000", "--seed", "7"]);
    assert_eq!(v["oracle"], 1.0);
    assert!(v["z"].as_f64().unwrap().abs() <= 3.0);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["n"], 100000);
    let v = json(&["estimate", "--m", "2", "--N", "3", "--k", "2", "--window", "0.1:0.5", "--n", "20000", "--seed", "7"]);
    assert!(v["z"].as_f64().unwrap().abs() <= 3.0, "{v}");
    let v = json(&["estimate", "--m", "2", "--N", "3", "--n", "1000", "--seed", "7"]);
    assert!(v["oracle"].is_null() && v["z"].is_null());
}

#[test]
fn zero_hit_windows_are_flagged_not_fatal() {
    let v = json(&["estimate", "--m", "3", "--N", "3", "--k", "0", "--window", "30:inf", "--n", "500", "--seed", "1"]);
    assert_eq!(v["zero_hits"], true);
    assert!(v["note"].is_string());
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let args = ["estimate", "--m", "3", "--N", "4", "--n", "20000", "--seed", "9"];
    let strip = |threads: &str| {
        let mut a = vec!["--threads", threads];
        a.extend_from_slice(&args);
        let mut v = json(&a);
        v.as_object_mut().unwrap().remove("runtime");
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(strip("1"), strip("8"));
    let a = run(&["estimate", "--m", "1", "--N", "3", "--seed", "3", "--n", "100"]);
    let b = Command::new(env!("CARGO_BIN_EXE_critpoints"))
        .args(["estimate", "--m", "1", "--N", "3", "--seed", "3", "--n", "100"])
        .env("CRITPOINTS_THREADS", "2")
        .output()
        .unwrap();
    let body = |o: &Output| {
        let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
        let t = v["runtime"]["threads"].clone();
        v.as_object_mut().unwrap().remove("runtime");
        (v, t)
    };
    let (va, _) = body(&a);
    let (vb, tb) = body(&b);
    assert_eq!(va, vb);
    assert_eq!(tb, 2);
}

#[test]
fn rate_curve_csv() {
    let out = stdout(&["estimate", "--rate-curve", "total", "--N", "3", "--x", "3", "--m", "10,20", "--n", "200", "--seed", "1"]);
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["m", "empirical_rate", "analytic_rate"]);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][0], "10");
    let analytic: f64 = rows[1][2].parse().unwrap();
    assert!((analytic - (-0.113706)).abs() < 1e-5, "{analytic}");
    assert!(!run(&["estimate", "--rate-curve", "total", "--N", "3", "--m", "20,10", "--n", "10"]).status.success());
}

#[test]
fn seed_is_mandatory_under_ci() {
    let o = Command::new(env!("CARGO_BIN_EXE_critpoints"))
        .args(["estimate", "--m", "1", "--N", "2", "--n", "10"])
        .env("CI", "true")
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
    let o = Command::new(env!("CARGO_BIN_EXE_critpoints"))
        .args(["estimate", "--m", "1", "--N", "2", "--n", "10", "--seed", "1"])
        .env("CI", "true")
        .output()
        .unwrap();
    assert!(o.status.success());
}

#[test]
fn direct_counts_and_points() {
    let pts = tmp("points.csv");
    let v = json(&["direct", "--m", "1", "--N", "2", "--sections", "200", "--seed", "11", "--points", pts.to_str().unwrap()]);
    let idx1 = v["by_index"].as_array().unwrap().iter().find(|r| r["index"] == 1).unwrap();
    assert_eq!(idx1["mean"], 1.0);
    assert_eq!(v["flagged"], 0);
    let rows = csv_rows(&std::fs::read_to_string(&pts).unwrap());
    assert_eq!(rows[0], ["section_id", "chart", "z1_re", "z1_im", "normalized_value", "index", "residual", "stable", "degenerate"]);
    assert_eq!(rows.len() - 1, 400);
}

#[test]
fn direct_refuses_large_dimensions() {
    let o = run(&["direct", "--m", "4", "--N", "2"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("m <= 3"));
}

#[test]
fn covariance_table_has_z_scores() {
    let out = stdout(&["direct", "--m", "2", "--N", "3", "--verify-covariances", "--n", "5000", "--seed", "4"]);
    let rows = csv_rows(&out);
    assert_eq!(rows[0].last().unwrap(), "z");
    assert!(rows.iter().skip(1).any(|r| r[0] == "ddf.ddf"));
    assert!(out.contains("# gradient density"));
}

#[test]
fn direct_versus_wishart_table() {
    let out = stdout(&["direct", "--m", "1", "--N", "3", "--compare-wishart", "--sections", "300", "--n", "20000", "--seed", "5"]);
    let rows = csv_rows(&out);
    assert_eq!(rows[0], ["target", "direct_mean", "direct_stderr", "wishart_mean", "wishart_stderr", "combined_z"]);
    let targets: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(targets, ["index=2", "index=1", "total"]);
    for r in &rows[1..] {
        assert!(r[5].parse::<f64>().unwrap().abs() <= 4.0, "{r:?}");
    }
}

#[test]
fn wishart_summary_and_spectra() {
    let spectra = tmp("spectra.csv");
    let v = json(&["wishart", "--m", "20", "--samples", "50", "--seed", "2", "--spectra", spectra.to_str().unwrap()]);
    assert!(v["ks_distance_to_mp"].as_f64().unwrap() < 0.1);
    let rows = csv_rows(&std::fs::read_to_string(&spectra).unwrap());
    assert_eq!(rows[0], ["sample", "k", "eigenvalue"]);
    assert_eq!(rows.len() - 1, 1000);
}

#[test]
fn verify_subset_and_json_report() {
    let report = tmp("report.json");
    let o = run(&["verify", "--only", "smallest-eig", "--json", report.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("PASS smallest-eig"));
    assert!(!text.contains("mp-identity"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    let rows = v["results"][0]["measurements"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r["rule"] == "|z| <= 3"));
}
