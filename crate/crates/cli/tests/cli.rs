use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use xtlab_cli::dispatch;

fn xtlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xtlab"))
        .args(args)
        .env("RUST_LOG", "warn")
        .env_remove("XTLAB_DATA_DIR")
        .output()
        .unwrap()
}

fn json_stdout(args: &[&str]) -> Value {
    let out = xtlab(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    dispatch(std::iter::once("xtlab").chain(args.iter().copied()))
}

fn path(dir: &Path, f: &str) -> String {
    dir.join(f).to_string_lossy().into_owned()
}

#[test]
fn bound_prints_all_fields() {
    let v = json_stdout(&[
        "bound", "--m", "192", "--n", "620000", "--t-norm", "0.8", "--alpha", "0.05",
    ]);
    assert!((v["tight"].as_f64().unwrap() - 3.2625).abs() < 1e-3);
    assert!((v["loose"].as_f64().unwrap() - 6.498).abs() < 2e-3);
    assert!(v["t_term"].is_f64() && v["g_term"].is_f64());
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["simulate", "--help"]), 0);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["bound", "--m", "192"]), 2);
    assert_eq!(code(&["bound", "--m", "0", "--n", "5", "--t-norm", "0.5"]), 2);
    assert_eq!(code(&["bound", "--m", "5", "--n", "5", "--t-norm", "1.0"]), 1);
    assert_eq!(code(&["simulate", "--reps", "0"]), 2);
    assert_eq!(code(&["simulate", "--grids", "16x0"]), 2);
    assert_eq!(code(&["simulate", "--tol", "-1"]), 2);
    assert_eq!(
        code(&["recommend", "--reference-law", "--n", "1000", "--quantile", "1.5"]),
        2
    );
    assert_eq!(code(&["recommend", "--reference-law", "--n", "10"]), 1);
    assert_eq!(code(&["fit", "--sim", "/nonexistent/sim.csv"]), 1);
    assert_eq!(code(&["ingest", "--data-dir", "/nonexistent"]), 1);
}

#[test]
fn recommend_from_seasons() {
    let v = json_stdout(&["recommend", "--reference-law", "--seasons", "4"]);
    assert_eq!(v["n"], 2_480_000);
    assert_eq!(v["m_max"], 278);
    assert!(v["quantile_at_m_max"].as_f64().unwrap() < 0.03);
}

#[test]
fn recommend_writes_curve() {
    let dir = tempfile::tempdir().unwrap();
    let curve = path(dir.path(), "curve.csv");
    let v = json_stdout(&["recommend", "--reference-law", "--n", "620000", "--curve", &curve]);
    let m_max = v["m_max"].as_u64().unwrap();
    let text = fs::read_to_string(&curve).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "m,q10,q50,q90");
    assert_eq!(lines.len() as u64, 2 * m_max + 1);
}

#[test]
fn describe_reports_thresholds() {
    let v = json_stdout(&[
        "describe",
        "--reference-law",
        "--m",
        "192",
        "--n",
        "620000",
        "--thresholds",
        "0.03,0.05",
    ]);
    let t = v["thresholds"].as_array().unwrap();
    assert_eq!(t.len(), 2);
    assert!((t[0]["prob_below"].as_f64().unwrap() - 0.6209).abs() < 5e-4);
}

#[test]
fn small_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| path(dir.path(), f);
    let sim_args = |out: &str| {
        vec![
            "simulate".to_string(),
            "--grids".into(),
            "4x3,8x6".into(),
            "--sizes".into(),
            "20000,40000,80000".into(),
            "--reps".into(),
            "10".into(),
            "--synthetic-events".into(),
            "400000".into(),
            "--out".into(),
            out.into(),
        ]
    };
    let run = |args: Vec<String>| {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = xtlab(&refs);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    };
    run(sim_args(&p("sim.csv")));
    run(sim_args(&p("sim2.csv")));
    assert_eq!(fs::read(p("sim.csv")).unwrap(), fs::read(p("sim2.csv")).unwrap());
    let sim = fs::read_to_string(p("sim.csv")).unwrap();
    assert_eq!(sim.lines().count(), 1 + 2 * 3 * 10);

    run([
        "fit",
        "--sim",
        &p("sim.csv"),
        "--out",
        &p("fit.json"),
        "--qq",
        &p("qq.csv"),
    ]
    .map(String::from)
    .to_vec());
    let fit: Value = serde_json::from_slice(&fs::read(p("fit.json")).unwrap()).unwrap();
    assert_eq!(fit["n_obs"], 60);
    for k in ["c", "alpha", "beta", "sigma2", "r2", "adj_r2", "loglik", "aic", "bic"] {
        assert!(fit[k].is_f64(), "{k}");
    }
    assert!(fit["se"]["alpha"].is_f64() && fit["ci95"]["beta"].is_array());
    assert_eq!(fs::read_to_string(p("qq.csv")).unwrap().lines().count(), 61);

    let rec = json_stdout(&["recommend", "--fit", &p("fit.json"), "--seasons", "4"]);
    assert_eq!(rec["n"], 2_480_000);
}

#[test]
fn train_then_simulate_from_model() {
    let dir = tempfile::tempdir().unwrap();
    let p = |f: &str| path(dir.path(), f);
    let out = xtlab(&[
        "train",
        "--synthetic",
        "--synthetic-events",
        "200000",
        "--grid",
        "6x4",
        "--out",
        &p("m.json"),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let model: Value = serde_json::from_slice(&fs::read(p("m.json")).unwrap()).unwrap();
    assert_eq!(model["xt"].as_array().unwrap().len(), 24);
    assert_eq!(model["solver"]["converged"], true);

    let b = json_stdout(&["bound", "--model", &p("m.json")]);
    assert!(b["tight"].as_f64().unwrap() > 0.0);

    let out = xtlab(&[
        "simulate",
        "--models",
        &p("m.json"),
        "--sizes",
        "5000",
        "--reps",
        "3",
        "--out",
        &p("s.csv"),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sim = fs::read_to_string(p("s.csv")).unwrap();
    assert!(sim.lines().skip(1).all(|l| l.starts_with("24,5000,")));
}

#[test]
fn ingest_then_train() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    fs::write(
        root.join("competitions.json"),
        r#"[{"competition_id": 1, "season_id": 2}]"#,
    )
    .unwrap();
    fs::create_dir_all(root.join("matches/1")).unwrap();
    fs::write(root.join("matches/1/2.json"), r#"[{"match_id": 7}]"#).unwrap();
    fs::create_dir_all(root.join("events")).unwrap();
    fs::write(
        root.join("events/7.json"),
        r#"[
            {"type": {"name": "Pass"}, "location": [10, 10], "pass": {"end_location": [100, 40]}},
            {"type": {"name": "Shot"}, "location": [110, 40], "shot": {"outcome": {"name": "Goal"}}},
            {"type": {"name": "Pressure"}, "location": [50, 50]}
        ]"#,
    )
    .unwrap();
    let events = path(root, "events.csv");
    let out = xtlab(&["ingest", "--data-dir", &root.to_string_lossy(), "--out", &events]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(&events).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().nth(1).unwrap().starts_with("7,move,"));

    let out = Command::new(env!("CARGO_BIN_EXE_xtlab"))
        .args(["train", "--events", &events, "--grid", "2x2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let model: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(model["n_events"], 2);
}
