use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, experiment: &str, config: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_diamond-node"))
        .arg(experiment)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn cavity_params_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "cavity-params", "{}", &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/cavity-params.csv")).unwrap();
    assert!(csv.starts_with("distance_nm,g_2pi_ghz,"));
    assert_eq!(csv.lines().count(), 18);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/cavity-params.json")).unwrap()).unwrap();
    assert_eq!(meta["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(meta["tier"], "full-cesium");
    assert_eq!(meta["atomic_data_version"], "cs133-clock-1");
    assert!(meta["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert!(!meta["data_provenance"].as_array().unwrap().is_empty());
}

#[test]
fn rerun_gives_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"error_scaling": {"cooperativities": [10]}, "optimizer": {"max_evaluations": 40, "grid_points": 0}}"#;
    let read = |d: &Path| std::fs::read(d.join("out/error-scaling.csv")).unwrap();
    assert_eq!(code(&run(dir.path(), "error-scaling", cfg, &["--seed", "3"])), 4);
    let first = read(dir.path());
    assert_eq!(code(&run(dir.path(), "error-scaling", cfg, &["--seed", "3", "--jobs", "1"])), 4);
    assert_eq!(first, read(dir.path()));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run(dir.path(), "combined", r#"{"unknown": 1}"#, &[])), 2);
    assert_eq!(code(&run(dir.path(), "combined", r#"{"combined": {"kappa": -1}}"#, &[])), 2);
    assert_eq!(code(&run(dir.path(), "bogus", "{}", &[])), 2);
    assert_eq!(code(&run(dir.path(), "purity-sweep", "{}", &["--tier", "generic"])), 2);
    assert_eq!(code(&run(dir.path(), "combined", "{}", &["--tier", "full-potassium"])), 2);
    assert_eq!(code(&run(dir.path(), "cavity-params", "not json", &[])), 2);
    let o = run(dir.path(), "time-trace", r#"{"experiment": "combined"}"#, &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("experiment"));
}

#[test]
fn budget_exhaustion_exits_4_with_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg =
        r#"{"error_scaling": {"cooperativities": [10, 30]}, "optimizer": {"max_evaluations": 10, "grid_points": 0}}"#;
    assert_eq!(code(&run(dir.path(), "error-scaling", cfg, &[])), 4);
    let csv = std::fs::read_to_string(dir.path().join("out/error-scaling.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    let meta = std::fs::read_to_string(dir.path().join("out/error-scaling.json")).unwrap();
    assert!(meta.contains("\"budget_exhausted\": true"));
}

#[test]
fn numerical_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"time_trace": {"samples": 3, "params": {
        "g": 1e200, "kappa_f": 1000, "kappa_l": 1000, "gamma1": 1, "gamma2": 1, "gamma3": 1,
        "omega1": 1e200, "omega_e": 1e200, "omega2": 1e200, "t1": 0.1, "t2": 0.2}}}"#;
    let o = run(dir.path(), "time-trace", cfg, &[]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn time_trace_rows_conserve_probability() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"time_trace": {"samples": 21, "params": {
        "g": 308.2, "kappa_f": 1000, "kappa_l": 1000, "gamma1": 1, "gamma2": 1, "gamma3": 1,
        "omega1": 5, "omega_e": 10, "omega2": 100, "t1": 0.23, "t2": 0.2457}}}"#;
    assert_eq!(code(&run(dir.path(), "time-trace", cfg, &[])), 0);
    let csv = std::fs::read_to_string(dir.path().join("out/time-trace.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,omega1,omega2,pop_0,pop_1,pop_e1,pop_e2,pop_e3,pop_photon,sinks,other,norm");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 21);
    assert_eq!(rows[0][3], 1.0);
    for r in &rows {
        assert!((r[11] - 1.0).abs() < 1e-6);
        assert!(r[10].abs() < 1e-12);
    }
}
