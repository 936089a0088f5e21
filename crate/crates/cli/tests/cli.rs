use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noiseamp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn num(v: &Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {v}"))
}

#[test]
fn consensus_ring_of_four() {
    let v = run_json(&["consensus", "--algo", "gd", "--torus", "1,4", "--params", "table2"]);
    assert_eq!(num(&v, "jbar"), 3.375);
    assert_eq!(v["params"], "table2");
}

#[test]
fn analyze_heavy_ball_rate() {
    let v = run_json(&["analyze", "--algo", "hb", "--spectrum", "1,9", "--params", "table2"]);
    assert!((num(&v, "rho") - 0.5).abs() < 1e-12);
    assert!((num(&v, "J") - 160.0 / 27.0).abs() < 1e-12);
    // configuration echo
    for key in ["algo", "alpha", "beta", "sigma", "sigma_mode", "spectrum"] {
        assert!(!v[key].is_null(), "{key} not echoed");
    }
}

#[test]
fn analyze_accepts_json_spectrum() {
    let a = run_json(&["analyze", "--algo", "na", "--spectrum", "[1, 4.5, 9]"]);
    let b = run_json(&["analyze", "--algo", "na", "--spectrum", "1,4.5,9"]);
    assert_eq!(a, b);
}

#[test]
fn certify_nesterov() {
    let v = run_json(&["certify", "--algo", "na", "--kappa", "100", "--n", "1"]);
    assert_eq!(v["valid"], true);
    assert!(num(&v, "bound") <= 4.08 * num(&v, "q"));
}

#[test]
fn certify_refinement_never_worsens() {
    let v = run_json(&[
        "certify", "--algo", "na", "--kappa", "10", "--n", "2", "--refine", "200",
    ]);
    assert_eq!(v["refined"]["valid"], true);
    assert!(num(&v["refined"], "bound") <= num(&v, "bound"));
}

#[test]
fn usage_errors_exit_2() {
    let both = run(&[
        "analyze",
        "--algo",
        "gd",
        "--spectrum",
        "1,2",
        "--kappa",
        "2",
        "--n",
        "2",
    ]);
    assert_eq!(both.status.code(), Some(2));
    let none = run(&["analyze", "--algo", "gd"]);
    assert_eq!(none.status.code(), Some(2));
    let bad_algo = run(&["analyze", "--algo", "adam", "--spectrum", "1,2"]);
    assert_eq!(bad_algo.status.code(), Some(2));
    let missing_beta = run(&["analyze", "--algo", "hb", "--spectrum", "1,2", "--alpha", "0.1"]);
    assert_eq!(missing_beta.status.code(), Some(2));
}

#[test]
fn domain_errors_exit_3_with_json() {
    let out = run(&[
        "analyze",
        "--algo",
        "na",
        "--spectrum",
        "1,10",
        "--alpha",
        "0.2",
        "--beta",
        "0.5",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "Unstable");
    assert!(err["message"].as_str().unwrap().contains("unstable"));

    let out = run(&["tune", "--algo", "gd", "--spectrum", "1,9", "--c", "5"]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "InfeasibleCap");

    let out = run(&[
        "simulate",
        "--algo",
        "na",
        "--spectrum",
        "1,10",
        "--alpha",
        "0.2",
        "--beta",
        "0.5",
        "--steps",
        "100000",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let err: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"], "NonFinite");
}

fn csv_first_row(args: &[&str]) -> Vec<(String, String)> {
    let out = run(args);
    assert!(out.status.success());
    let mut r = csv::Reader::from_reader(&out.stdout[..]);
    let header = r.headers().unwrap().clone();
    let row = r.records().next().unwrap().unwrap();
    header
        .iter()
        .map(String::from)
        .zip(row.iter().map(String::from))
        .collect()
}

#[test]
fn csv_matches_json() {
    let base = ["bounds", "--algo", "na", "--kappa", "100", "--n", "3"];
    let v = run_json(&base);
    let mut args = base.to_vec();
    args.extend(["--format", "csv"]);
    let cells = csv_first_row(&args);
    let lookup = |k: &str| cells.iter().find(|c| c.0 == k).map(|c| c.1.clone()).unwrap();
    assert_eq!(lookup("lower").parse::<f64>().unwrap(), num(&v, "lower"));
    assert_eq!(lookup("upper").parse::<f64>().unwrap(), num(&v, "upper"));
    assert_eq!(
        lookup("extremes.j_at_m").parse::<f64>().unwrap(),
        num(&v["extremes"], "j_at_m")
    );
    assert_eq!(
        lookup("ratio_to_gd.high").parse::<f64>().unwrap(),
        num(&v["ratio_to_gd"], "high")
    );
}

#[test]
fn csv_rows_follow_table() {
    let out = run(&["analyze", "--algo", "gd", "--spectrum", "1,2,3", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].contains("lambda") && lines[0].contains("j_hat"));
    assert!(!text.contains('\r'));
}

#[test]
fn sweep_streams_valid_json_and_csv() {
    let v = run_json(&["sweep", "--algo", "na", "--dim", "1", "--n0", "8,16,32,64"]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 4);
    assert!(v["fit"]["regime"]["kind"].is_string());

    let out = run(&[
        "sweep",
        "--algo",
        "na",
        "--dim",
        "1",
        "--n0",
        "8,16,32,64",
        "--format",
        "csv",
    ]);
    let mut r = csv::Reader::from_reader(&out.stdout[..]);
    let records: Vec<_> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(records.len(), 5);
    assert_eq!(&records[4][0], "fit");
    let slope: f64 = records[4][8].parse().unwrap();
    assert_eq!(slope, num(&v["fit"], "slope"));
}

#[test]
fn simulate_is_reproducible_and_writes_file() {
    let dir = std::env::temp_dir().join(format!("noiseamp-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("sim.json");
    let args = [
        "simulate",
        "--algo",
        "hb",
        "--spectrum",
        "1,9",
        "--steps",
        "20000",
        "--seed",
        "5",
    ];
    let mut with_out = args.to_vec();
    with_out.extend(["--out", path.to_str().unwrap()]);
    let out = run(&with_out);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let from_file: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(from_file, run_json(&args));
    assert!(num(&from_file, "rel_error") < 0.2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn ensemble_series() {
    let v = run_json(&[
        "simulate",
        "--algo",
        "gd",
        "--spectrum",
        "1,9",
        "--steps",
        "100",
        "--replicates",
        "3",
        "--every",
        "10",
    ]);
    let series = v["series"].as_array().unwrap();
    assert_eq!(series.len(), 10);
    assert_eq!(series[9]["step"], 100);
    assert!(series[0]["theory"].is_number());
}

#[test]
fn thread_cap_does_not_change_results() {
    let args = ["consensus", "--algo", "hb", "--torus", "2,40"];
    let auto = run(&args);
    let one = Command::new(env!("CARGO_BIN_EXE_noiseamp"))
        .args(args)
        .env("NOISEAMP_THREADS", "1")
        .output()
        .unwrap();
    assert!(auto.status.success() && one.status.success());
    assert_eq!(auto.stdout, one.stdout);
}
