use std::path::Path;
use std::process::{Command, Output};

use statrs::function::gamma::ln_gamma;
use subpop::birthdeath::{bd_pmf, BDSpec};
use subpop::BernsteinFunction;

const BIN: &str = env!("CARGO_BIN_EXE_subpop");

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

/// Parses CSV output into header and rows.
fn csv(out: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn yule_first_state_is_exp_minus_one() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "c.json",
        r#"{"process":{"kind":"yule","lambda":1},"subordinator":{"family":"stable","alpha":0.5},"states":[1]}"#,
    );
    let out = run(&["pmf", "--config", &c]);
    assert_eq!(out.status.code(), Some(0));
    let (h, rows) = csv(&out);
    assert_eq!(h, ["t", "k", "probability", "abs_error_bound", "warnings"]);
    let p: f64 = rows[0][column(&h, "probability")].parse().unwrap();
    assert!((p - (-1.0f64).exp()).abs() < 1e-15);
}

#[test]
fn death_table_sums_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "c.json",
        r#"{"process":{"kind":"linear_death","mu":1,"initial":3},"subordinator":{"family":"stable","alpha":0.5}}"#,
    );
    let out = run(&["pmf", "--config", &c]);
    let (h, rows) = csv(&out);
    assert_eq!(rows.len(), 4);
    let total: f64 = rows.iter().map(|r| r[column(&h, "probability")].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12, "{total}");
}

#[test]
fn bd_table_equals_library_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "c.json",
        r#"{"process":{"kind":"birth_death","lambda":1,"mu":1},"subordinator":{"family":"stable","alpha":0.5},"states":{"from":0,"to":10}}"#,
    );
    let out = run(&["pmf", "--config", &c]);
    let (h, rows) = csv(&out);
    let f = BernsteinFunction::stable(0.5).unwrap();
    let spec = BDSpec::new(1.0, 1.0, 1).unwrap();
    assert_eq!(rows.len(), 11);
    for (n, row) in rows.iter().enumerate() {
        let lib = bd_pmf(&spec, &f, 1.0, n).unwrap();
        let cli: f64 = row[column(&h, "probability")].parse().unwrap();
        assert_eq!(cli.to_bits(), lib.value.to_bits(), "n={n}");
        let err: f64 = row[column(&h, "abs_error_bound")].parse().unwrap();
        assert_eq!(err.to_bits(), lib.abs_error.to_bits());
    }

    let json = run(&["pmf", "--config", &c, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    for (n, row) in v.as_array().unwrap().iter().enumerate() {
        let lib = bd_pmf(&spec, &f, 1.0, n).unwrap();
        assert_eq!(row["probability"].as_f64().unwrap().to_bits(), lib.value.to_bits());
        assert_eq!(row["k"].as_u64().unwrap(), n as u64);
    }
}

#[test]
fn rows_sorted_by_time_then_state() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "c.json",
        r#"{"process":{"kind":"yule","lambda":1},"subordinator":{"family":"gamma","rate":1},"times":[2,0.5],"states":[3,1]}"#,
    );
    let (h, rows) = csv(&run(&["pmf", "--config", &c]));
    let keys: Vec<(String, String)> = rows.iter().map(|r| (r[column(&h, "t")].clone(), r[column(&h, "k")].clone())).collect();
    let want = [("5.0000000000000000e-1", "1"), ("5.0000000000000000e-1", "3"), ("2.0000000000000000e0", "1"), ("2.0000000000000000e0", "3")];
    for (got, w) in keys.iter().zip(want) {
        assert_eq!((got.0.as_str(), got.1.as_str()), w);
    }
}

#[test]
fn killed_explosion_probability() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "c.json",
        r#"{"process":{"kind":"yule","lambda":1},"subordinator":{"family":"stable","alpha":0.5,"kill_rate":1}}"#,
    );
    let (h, rows) = csv(&run(&["explode", "--config", &c]));
    let p: f64 = rows[0][column(&h, "explosion_probability")].parse().unwrap();
    assert!((p - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
}

#[test]
fn stable_moments_are_infinite() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "c.json",
        r#"{"process":{"kind":"yule","lambda":1},"subordinator":{"family":"stable","alpha":0.3},"orders":[1,2,3]}"#,
    );
    let (h, rows) = csv(&run(&["moments", "--config", &c]));
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r[column(&h, "status")], "INFINITE");
    }
}

#[test]
fn sojourn_means_match_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "c.json",
        r#"{"process":{"kind":"birth_death","lambda":1,"mu":1},"subordinator":{"family":"stable","alpha":0.5},"times":["inf"],"states":{"from":1,"to":10}}"#,
    );
    let (h, rows) = csv(&run(&["sojourn", "--config", &c]));
    assert_eq!(&h[..5], ["k", "t", "mean", "lower_bound", "upper_bound"]);
    for r in &rows {
        let k: f64 = r[0].parse().unwrap();
        let mean: f64 = r[2].parse().unwrap();
        let (lo, hi): (f64, f64) = (r[3].parse().unwrap(), r[4].parse().unwrap());
        // Γ(3/2)Γ(k−1/2) / (k! Γ(1/2)).
        let exact = (ln_gamma(1.5) + ln_gamma(k - 0.5) - ln_gamma(k + 1.0) - ln_gamma(0.5)).exp();
        assert!((mean / exact - 1.0).abs() < 1e-12, "k={k}");
        assert!(lo <= mean * (1.0 + 1e-14) && mean <= hi * (1.0 + 1e-14));
    }
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(
        dir.path(),
        "a.json",
        r#"{"process":{"kind":"yule","lambda":1},"subordinator":{"family":"stable","alpha":0.5},"colour":"red"}"#,
    );
    let out = run(&["pmf", "--config", &unknown]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pmf"));
    assert_eq!(run(&["pmf"]).status.code(), Some(2));
    assert_eq!(run(&["pmf", "--config", "/nonexistent/x.json"]).status.code(), Some(2));
    let yule = write_config(
        dir.path(),
        "b.json",
        r#"{"process":{"kind":"yule","lambda":1},"subordinator":{"family":"stable","alpha":0.5}}"#,
    );
    let out = run(&["extinction", "--config", &yule]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("extinction"));
    assert_eq!(run(&["sojourn", "--config", &yule]).status.code(), Some(2));
}

#[test]
fn unmet_tolerance_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "c.json",
        r#"{"process":{"kind":"yule","lambda":1},"subordinator":{"family":"stable","alpha":0.5},"states":[5]}"#,
    );
    assert_eq!(run(&["pmf", "--config", &c, "--tol-abs", "1e-3"]).status.code(), Some(0));
    let out = run(&["pmf", "--config", &c, "--tol-abs", "1e-40"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("pmf"));
}

#[test]
fn simulate_is_deterministic_and_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "c.json",
        r#"{"process":{"kind":"yule","lambda":1},"subordinator":{"family":"stable","alpha":0.5},"simulation":{"paths":20000}}"#,
    );
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let first = run(&["simulate", "--config", &c, "--seed", "5", "--workers", "1", "--out", a.to_str().unwrap()]);
    let second = run(&["simulate", "--config", &c, "--seed", "5", "--workers", "4", "--out", b.to_str().unwrap()]);
    assert_eq!(first.status.code(), second.status.code());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&a).unwrap()).unwrap();
    assert_eq!(report["n_paths"], 20000);
    let again = run(&["simulate", "--config", &c, "--seed", "5"]);
    assert_eq!(again.stdout, std::fs::read(&a).unwrap());

    let default = write_config(
        dir.path(),
        "d.json",
        r#"{"process":{"kind":"yule","lambda":1},"subordinator":{"family":"stable","alpha":0.5}}"#,
    );
    let out = run(&["simulate", "--config", &default]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["verdicts"]["all_pass"], true);

    let wrong = write_config(
        dir.path(),
        "w.json",
        r#"{"process":{"kind":"yule","lambda":1},"subordinator":{"family":"stable","alpha":0.5},"simulation":{"paths":20000,"reference_offset":0.05}}"#,
    );
    assert_eq!(run(&["simulate", "--config", &wrong, "--seed", "5"]).status.code(), Some(4));
}

#[test]
fn simulate_writes_paths() {
    let dir = tempfile::tempdir().unwrap();
    let paths = dir.path().join("paths.csv");
    let body = format!(
        r#"{{"process":{{"kind":"linear_death","mu":1,"initial":5}},"subordinator":{{"family":"gamma","rate":1,"kill_rate":0.5}},"simulation":{{"paths":2000,"paths_csv":{:?}}}}}"#,
        paths.to_str().unwrap()
    );
    let c = write_config(dir.path(), "c.json", &body);
    let out = run(&["simulate", "--config", &c, "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&paths).unwrap();
    assert_eq!(text.lines().count(), 2001);
    assert!(text.lines().any(|l| l.ends_with(",inf,INF")));
    let (h, rows) = csv(&out);
    assert!(rows.iter().any(|r| r[column(&h, "state")] == "INF"));
}

#[test]
fn validate_suite_and_tightening() {
    let out = run(&["validate"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let (h, rows) = csv(&out);
    let v = rows.iter().find(|r| r[0] == "vandermonde_residual").unwrap();
    assert!(v[column(&h, "measured")].parse::<f64>().unwrap() < 1e-10);
    assert!(rows.iter().all(|r| r[column(&h, "status")] == "pass"));

    let strict = run(&["validate", "--tol-abs", "1e-300"]);
    assert_eq!(strict.status.code(), Some(4));
    let (h2, rows2) = csv(&strict);
    let t = column(&h2, "threshold");
    assert!(rows2.iter().any(|r| r[t] == "1.0000000000000000e-300"));
}
