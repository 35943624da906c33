//! Command-line behaviour: output formats, exit codes and mutation detection.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spaceform")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn solve_prints_json_report() {
    let out = run(&["solve", "--geom", "sph", "--r0", "0.3", "--r1", "1.0", "--t", "0.35", "--L", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["geometry"], "sph");
    assert_eq!(v["t"], 0.35);
    assert!(v["J"].as_f64().unwrap() > 0.0);
    assert!(v["lambda1"].as_f64().unwrap() > 0.0);
    assert_eq!(v["mesh_stats"]["valid"], true);
    assert!(v["energy_identity_residual"].as_f64().unwrap() < 1e-8);
}

#[test]
fn sweep_csv_is_byte_stable() {
    let args = ["sweep", "--geom", "hyp", "--r0", "0.3", "--r1", "1.0", "--t-grid", "0:0.4:0.2", "--L", "1"];
    let (a, b) = (run(&args), run(&args));
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "geom,r0,r1,t,L,J,lambda1,dJ_bnd,dJ_vol,dlam_bnd,dJ_fd,dlam_fd");
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        assert_eq!(line.split(',').count(), 12);
        assert!(line.starts_with("hyp,"));
    }
}

#[test]
fn sweep_writes_to_file_from_config() {
    let dir = std::env::temp_dir().join(format!("spaceform-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (config, csv) = (dir.join("run.json"), dir.join("rows.csv"));
    std::fs::write(&config, r#"{"geom": "euc", "r0": 0.5, "r1": 1.0, "t-grid": "0:0.2:0.1", "L": 1}"#).unwrap();
    let out = run(&["sweep", "--config", config.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(out.stdout.is_empty());
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 4);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn oracle_prints_constants() {
    let out = run(&["oracle", "--geom", "sph", "--r0", "0.3", "--r1", "1.0"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((v["C"].as_f64().unwrap() + 0.814331530252712).abs() < 1e-12);
    assert!((v["D"].as_f64().unwrap() + 0.319726802098452).abs() < 1e-12);
    assert_eq!(v["samples"].as_array().unwrap().len(), 11);
}

#[test]
fn convergence_reports_orders() {
    let out = run(&["convergence", "--geom", "euc", "--r0", "0.5", "--r1", "1.0", "--L", "4"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("L,J,lambda1,"));
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("order"));
    let out = run(&["convergence", "--geom", "euc", "--r0", "0.5", "--r1", "1.0", "--t", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_input_exits_with_code_2() {
    let cases: [&[&str]; 6] = [
        &["solve", "--geom", "sph", "--r1", "1.0"],
        &["solve", "--geom", "sph", "--r0", "0.3", "--r1", "1.0", "--t", "0.8"],
        &["solve", "--geom", "sph", "--r0", "1.0", "--r1", "0.3"],
        &["solve", "--geom", "cyl", "--r0", "0.3", "--r1", "1.0"],
        &["sweep", "--geom", "sph", "--r0", "0.3", "--r1", "1.0", "--t-grid", "0:1"],
        &["solve", "--geom", "sph", "--r0", "0.3", "--r1", "1.0", "--t-grid", "0:0.2:0.1"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(!stderr(&out).is_empty());
    }
    let out = run(&["solve", "--geom", "sph", "--r1", "1.0"]);
    assert!(stderr(&out).contains("missing --r0"));
}

#[test]
fn verify_detects_injected_sign_errors() {
    for (inject, check) in [("cos-beta-sign", "normal velocity identity"), ("flux-sign", "Hopf sign")] {
        let out = run(&["verify", "--L", "1", "--inject", inject]);
        assert_eq!(out.status.code(), Some(1), "{inject}");
        assert!(stderr(&out).contains(check), "{inject}: {}", stderr(&out));
    }
}
