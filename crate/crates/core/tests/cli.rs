use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use tempfile::TempDir;
use wfgame::cli::{run, EXIT_CHECK, EXIT_INPUT, EXIT_OK, EXIT_REGIME};

fn config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn wfgame(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("wfgame").chain(args.iter().copied()), &mut out, &mut err);
    Outcome {
        code,
        stdout: String::from_utf8(out).unwrap(),
        stderr: String::from_utf8(err).unwrap(),
    }
}

fn json(o: &Outcome) -> Value {
    serde_json::from_str(&o.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn write_config(dir: &TempDir, name: &str, body: &str) -> String {
    let p = path(dir, name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn single_reports_the_water_fill() {
    let o = wfgame(&["single", "--config", &config("ex1.json")]);
    assert_eq!(o.code, EXIT_OK);
    let v = json(&o);
    let expected = [7.771, 7.071, 5.881, 3.858, 0.419];
    for (a, b) in v["strategy"].as_array().unwrap().iter().zip(expected) {
        assert!((a.as_f64().unwrap() - b).abs() < 1e-3);
    }
    assert_eq!(v["phi"].as_array().unwrap().len(), 5);
}

#[test]
fn single_channel_gets_the_budget() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "one.json", r#"{"weights":[1.0],"noise":[2.0],"g":0.0,"budgets":[3.5]}"#);
    let v = json(&wfgame(&["single", "--config", &cfg]));
    assert_eq!(v["strategy"][0].as_f64().unwrap(), 3.5);
}

#[test]
fn malformed_config_is_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "bad.json", r#"{"weights":[1.0,1.0],"noise":[1.0,-2.0],"g":0.5,"budgets":[1.0]}"#);
    let o = wfgame(&["single", "--config", &cfg]);
    assert_eq!(o.code, EXIT_INPUT);
    assert!(o.stderr.contains("noise"), "{}", o.stderr);
    let cfg = write_config(&dir, "extra.json", r#"{"weights":[1.0],"noise":[1.0],"g":0.5,"budgets":[1.0],"x":1}"#);
    assert_eq!(wfgame(&["nash", "--config", &cfg]).code, EXIT_INPUT);
}

#[test]
fn nash_refuses_unit_crosstalk() {
    let o = wfgame(&["nash", "--config", &config("ex2_g1.json")]);
    assert_eq!(o.code, EXIT_REGIME);
    assert!(o.stderr.contains("continuum"));
}

#[test]
fn nash_output_checks_clean() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "ne.json");
    let csv = path(&dir, "ne.csv");
    let o = wfgame(&[
        "nash",
        "--config",
        &config("ex3.json"),
        "--out",
        out.to_str().unwrap(),
        "--csv",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(o.code, EXIT_OK);
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert!(v["kkt"]["satisfied"].as_bool().unwrap());
    assert!(v["kkt"]["max_residual"].as_f64().unwrap() <= 1e-8);
    for key in ["strategies", "thresholds", "breakpoints", "payoffs"] {
        assert!(v.get(key).is_some(), "{key}");
    }

    let table = fs::read_to_string(&csv).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("user,channel,power"));
    assert_eq!(lines.count(), 15);
    // Full precision: the CSV values are the JSON values.
    let first: f64 = table.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(first, v["strategies"][0][0].as_f64().unwrap());

    let o = wfgame(&["check", "--config", &config("ex3.json"), "--strategies", out.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
    assert!(json(&o)["satisfied"].as_bool().unwrap());
}

#[test]
fn perturbed_profile_fails_check() {
    let dir = TempDir::new().unwrap();
    let v = json(&wfgame(&["nash", "--config", &config("ex2.json")]));
    let mut rows: Vec<Vec<f64>> = serde_json::from_value(v["strategies"].clone()).unwrap();
    rows[0][0] += 0.1;
    rows[0][2] -= 0.1;
    let file = path(&dir, "p.json");
    fs::write(&file, serde_json::to_string(&rows).unwrap()).unwrap();
    let o = wfgame(&["check", "--config", &config("ex2.json"), "--strategies", file.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_CHECK);
    let r = json(&o);
    assert!(!r["satisfied"].as_bool().unwrap());
    assert_eq!(r["residuals"].as_array().unwrap().len(), 2);

    rows[1][0] += 1.0;
    fs::write(&file, serde_json::to_string(&rows).unwrap()).unwrap();
    let o = wfgame(&["check", "--config", &config("ex2.json"), "--strategies", file.to_str().unwrap()]);
    assert_eq!(o.code, EXIT_INPUT);
}

fn iwfa_rows(g: f64) -> Vec<(f64, f64)> {
    let dir = TempDir::new().unwrap();
    let body = fs::read_to_string(config("ex2.json")).unwrap();
    let mut cfg: Value = serde_json::from_str(&body).unwrap();
    cfg["g"] = g.into();
    let cfg = write_config(&dir, "c.json", &cfg.to_string());
    let csv = path(&dir, "t.csv");
    let o = wfgame(&["iwfa", "--config", &cfg, "--trace-csv", csv.to_str().unwrap(), "--tol", "1e-8"]);
    assert_eq!(o.code, EXIT_OK);
    assert!(json(&o)["converged"].as_bool().unwrap());
    let text = fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().next(), Some("round,error,delta"));
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[1], f[2])
        })
        .collect()
}

#[test]
fn iwfa_trace_shrinks_and_slows_near_one() {
    let rows = iwfa_rows(0.9);
    assert!(rows.windows(2).all(|w| w[1].0 < w[0].0));
    assert!(iwfa_rows(0.95).len() > iwfa_rows(0.1).len());
}

#[test]
fn iwfa_reports_non_convergence() {
    let o = wfgame(&["iwfa", "--config", &config("ex2.json"), "--max-rounds", "3"]);
    assert_eq!(o.code, 1);
    assert!(!json(&o)["converged"].as_bool().unwrap());
}

#[test]
fn sweep_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let run_once = |name: &str| {
        let csv = path(&dir, name);
        let o = wfgame(&[
            "sweep",
            "--config",
            &config("ex2.json"),
            "--g-grid",
            "0.05:0.95:0.15",
            "--starts",
            "8",
            "--seed",
            "5",
            "--out-csv",
            csv.to_str().unwrap(),
        ]);
        assert_eq!(o.code, EXIT_OK, "{}", o.stderr);
        fs::read(csv).unwrap()
    };
    let a = run_once("a.csv");
    assert_eq!(a, run_once("b.csv"));
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().next(), Some("g,ne_sum,opt_sum,poa"));
    assert_eq!(text.lines().count(), 8);
}

#[test]
fn sweep_rejects_unit_crosstalk_in_grid() {
    let o = wfgame(&["sweep", "--config", &config("ex2.json"), "--g-grid", "0.5,1.0"]);
    assert_eq!(o.code, EXIT_INPUT);
}

#[test]
fn continuum_routing() {
    let o = wfgame(&["continuum", "--config", &config("ex2_g1.json"), "--count", "3"]);
    assert_eq!(o.code, EXIT_OK);
    let v = json(&o);
    let profiles = v["profiles"].as_array().unwrap();
    assert_eq!(profiles.len(), 3);
    assert!(profiles.iter().all(|p| p["kkt"]["satisfied"].as_bool().unwrap()));
    assert_eq!(wfgame(&["continuum", "--config", &config("ex2.json")]).code, EXIT_REGIME);
}

#[test]
fn digits_and_bits_change_display_only() {
    let dir = TempDir::new().unwrap();
    let csv = path(&dir, "n.csv");
    let nats = json(&wfgame(&["nash", "--config", &config("ex2.json")]));
    let bits = json(&wfgame(&[
        "nash",
        "--config",
        &config("ex2.json"),
        "--bits",
        "--digits",
        "3",
        "--csv",
        csv.to_str().unwrap(),
    ]));
    let (a, b) = (nats["payoffs"][0].as_f64().unwrap(), bits["payoffs"][0].as_f64().unwrap());
    assert!((b - a / std::f64::consts::LN_2).abs() < 1e-15);
    assert_eq!(nats["strategies"], bits["strategies"]);
    let line = fs::read_to_string(csv).unwrap().lines().nth(1).unwrap().to_string();
    assert_eq!(line.split(',').nth(2).unwrap().split('.').nth(1).unwrap().len(), 3);
}
