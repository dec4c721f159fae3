use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn carleman(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carleman")).args(args).output().expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn nu_rows_vanish_below_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nu.csv");
    let o = carleman(&["nu", "--preset", "gevrey:1", "--tmax", "1e4", "--out", s(&out)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,nu_m"));
    let mut below = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        if v[0] <= 1.0 {
            assert_eq!(v[1], 0.0);
            below += 1;
        } else {
            assert!(v[1] > 0.0);
        }
    }
    assert!(below > 0);
}

#[test]
fn nu_regularized_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nu.csv");
    let o = carleman(&["nu", "--preset", "gevrey:1", "--regularized", "--points", "20", "--out", s(&out)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next(), Some("t,nu_m,nu,eta"));
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn gevrey_two_slope_is_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("r.json");
    let out = dir.path().join("nu.csv");
    let o = carleman(&["nu", "--preset", "gevrey:2", "--fit-slope", "--out", s(&out), "--report", s(&report)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("fitted slope"));
    let slope = json(&report)["slope"].as_f64().unwrap();
    assert!((slope - 0.5).abs() < 0.05, "slope {slope}");
}

#[test]
fn convexity_violation_exits_two_with_index() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "0\n0\n3\n4\n").unwrap();
    let o = carleman(&["nu", "--table", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("p = 2"));
}

#[test]
fn bad_preset_and_empty_table_exit_two() {
    assert_eq!(carleman(&["nu", "--preset", "nope:1"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.txt");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(carleman(&["check", "--table", s(&empty)]).status.code(), Some(2));
}

#[test]
fn check_gevrey_one_all_hold() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let o = carleman(&["check", "--preset", "gevrey:1", "--out", s(&out)]);
    assert!(o.status.success());
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    for key in ["m2", "m2star", "nu_doubling", "nontriviality"] {
        assert_eq!(v[key]["holds"], true, "{key}");
    }
}

#[test]
fn check_capped_sequence_reports_violation() {
    // quotients grow like p until 10, then stay flat
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("capped.txt");
    let mut acc = 0.0f64;
    let mut text = String::from("0\n");
    for p in 1..=400usize {
        acc += (p.min(10) as f64).ln();
        text.push_str(&format!("{acc}\n"));
    }
    std::fs::write(&table, text).unwrap();
    let out = dir.path().join("c.json");
    let o = carleman(&["check", "--table", s(&table), "--range", "200", "--out", s(&out)]);
    assert!(o.status.success());
    let v = json(&out);
    assert_eq!(v["m2star"]["holds"], false);
    assert!(v["m2star"]["first_violation"].is_array());
}

#[test]
fn regularize_report_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let report = dir.path().join("r.json");
    let o = carleman(&["--seed", "7", "regularize", "--preset", "gevrey:1", "--out", s(&out), "--report", s(&report)]);
    assert!(o.status.success());
    let v = json(&report);
    assert_eq!(v["seed"], 7);
    assert_eq!(v["almost_lipschitz"]["holds"], true);
    assert_eq!(v["almost_lipschitz"]["samples"], 1000);
    assert!(std::fs::read_to_string(&out).unwrap().starts_with("t,nu,eta"));
}

#[test]
fn multiplier_tube_constants_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("tube.csv");
    let report = dir.path().join("m.json");
    let o = carleman(&[
        "multiplier", "--preset", "gevrey:1", "--tube", "0", "--tube", "1", "--re-max", "20", "--step", "0.5",
        "--out", s(&out), "--report", s(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&report);
    let c0 = v["tubes"][0]["c_n"].as_f64().unwrap();
    let c1 = v["tubes"][1]["c_n"].as_f64().unwrap();
    assert!(c1.is_finite() && c0 <= c1);
    assert!(dir.path().join("tube.n0.csv").exists());
    assert!(dir.path().join("tube.n1.csv").exists());
}

#[test]
fn factorize_gaussian_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let u = dir.path().join("u.csv");
    let psi = dir.path().join("psi.csv");
    let report = dir.path().join("f.json");
    let o = carleman(&[
        "factorize", "--preset", "gevrey:1", "--out", s(&u), "--psi-out", s(&psi), "--report", s(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&report);
    assert!(v["roundtrip_l2"].as_f64().unwrap() <= 1e-6);
    assert_eq!(v["schema_version"], 1);
    assert!(u.exists() && psi.exists());
}

#[test]
fn factorize_zero_input_gives_zero() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("zero.csv");
    let n = 1024;
    let mut text = String::from("x,re,im\n");
    for k in 0..n {
        let x = (k as f64 - n as f64 / 2.0) * 16.0 / (n as f64 / 2.0);
        text.push_str(&format!("{x:e},0,0\n"));
    }
    std::fs::write(&f, text).unwrap();
    let u = dir.path().join("u.csv");
    let o = carleman(&["factorize", "--preset", "gevrey:1", "--input", s(&f), "--out", s(&u)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = std::fs::read_to_string(&u).unwrap();
    for line in out.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!((v[1], v[2]), (0.0, 0.0));
    }
}

#[test]
fn factorize_family_summary() {
    let dir = tempfile::tempdir().unwrap();
    let u = dir.path().join("u.csv");
    let report = dir.path().join("f.json");
    let o = carleman(&[
        "factorize", "--preset", "gevrey:1", "--builtin", "translates", "--out", s(&u), "--report", s(&report),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&report);
    assert_eq!(v["family"]["members"], 5);
    assert!(v["family"]["max_roundtrip_l2"].as_f64().unwrap() <= 1e-6);
    assert!(v["family"]["uniform_log_bound"].as_f64().unwrap().is_finite());
    for i in 0..5 {
        assert!(dir.path().join(format!("u.{i}.csv")).exists());
    }
}

#[test]
fn factorize_overflow_exits_four_with_suggestion() {
    let o = carleman(&["factorize", "--preset", "gevrey:1", "--h", "1e9"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("try --h"));
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        assert!(carleman(&["regularize", "--preset", "gevrey:1", "--report", s(p)]).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    for p in [&a, &b] {
        assert!(carleman(&["factorize", "--preset", "gevrey:1", "--report", s(p)]).status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nu.csv");
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, format!("preset = gevrey:1\npoints = 11\nout = {}\n", s(&out))).unwrap();
    let o = carleman(&["--config", s(&cfg), "nu"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 12);
}

#[test]
fn multiplier_small_exponent_surfaces_warning() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("m.json");
    let o = carleman(&["multiplier", "--preset", "gevrey:0.25", "--pmax", "20", "--tube", "0", "--report", s(&report)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    assert!(!json(&report)["warnings"].as_array().unwrap().is_empty());
}
