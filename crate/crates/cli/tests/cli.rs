use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn hdinfer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdinfer")).args(args).output().expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_columns(name: &str) -> Vec<Vec<f64>> {
    std::fs::read_to_string(data(name))
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(|v| v.trim().parse().unwrap()).collect())
        .collect()
}

/// `Σ̂ = XᵀX/n` for the two-column toy design, and its inverse by the adjugate.
fn toy_gram() -> ([[f64; 2]; 2], [[f64; 2]; 2], usize) {
    let x = read_columns("x.csv");
    let n = x.len();
    let mut s = [[0.0; 2]; 2];
    for row in &x {
        for a in 0..2 {
            for b in 0..2 {
                s[a][b] += row[a] * row[b] / n as f64;
            }
        }
    }
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    let inv = [[s[1][1] / det, -s[0][1] / det], [-s[1][0] / det, s[0][0] / det]];
    (s, inv, n)
}

fn write_config(dir: &Path, name: &str, value: Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(&value).unwrap()).unwrap();
    path
}

fn as_f64s(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|e| e.as_f64().unwrap()).collect()
}

#[test]
fn exact_inverse_estimate_is_least_squares() {
    let (_, inv, n) = toy_gram();
    let x = read_columns("x.csv");
    let y: Vec<f64> = read_columns("y.csv").into_iter().map(|r| r[0]).collect();
    let xty: Vec<f64> = (0..2).map(|a| x.iter().zip(&y).map(|(r, v)| r[a] * v).sum::<f64>() / n as f64).collect();
    let ols = [inv[0][0] * xty[0] + inv[0][1] * xty[1], inv[1][0] * xty[0] + inv[1][1] * xty[1]];

    let out = json_stdout(&hdinfer(&["estimate", "--config", data("estimate_ols.json").to_str().unwrap()]));
    let b = as_f64s(&out["b_hat"]);
    for k in 0..2 {
        assert!((b[k] - ols[k]).abs() < 1e-10, "b_hat[{k}] = {} vs OLS {}", b[k], ols[k]);
    }
    // plug-in variance with Θ̂ = Σ̂⁻¹ and σ = 1
    let est = &out["estimate"];
    let variance = inv[0][0] / n as f64;
    assert!((est["variance"].as_f64().unwrap() - variance).abs() < 1e-12);
    let half = 1.959963984540054 * variance.sqrt();
    assert!((est["ci_lo"].as_f64().unwrap() - (ols[0] - half)).abs() < 1e-9);
    assert!((est["ci_hi"].as_f64().unwrap() - (ols[0] + half)).abs() < 1e-9);
}

#[test]
fn estimate_matches_golden_output() {
    let out = hdinfer(&["estimate", "--config", data("estimate_ols.json").to_str().unwrap()]);
    assert!(out.status.success());
    let expected = std::fs::read_to_string(golden("estimate_ols.json")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);
}

#[test]
fn near_zero_penalty_ggm_recovers_inverse_gram() {
    let (_, inv, _) = toy_gram();
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "ggm.json",
        serde_json::json!({"x": data("x.csv"), "entry": [0, 1], "lambda_j": 1e-10, "solver": {"tol": 1e-14}}),
    );
    let out = json_stdout(&hdinfer(&["ggm", "--config", cfg.to_str().unwrap()]));
    let t = &out["t_hat"];
    for a in 0..2 {
        for b in 0..2 {
            let v = t[a][b].as_f64().unwrap();
            assert!((v - inv[a][b]).abs() < 1e-8, "T[{a}][{b}] = {v} vs {}", inv[a][b]);
        }
    }
    let entry = &out["entry"]["estimate"];
    assert!((entry["value"].as_f64().unwrap() - inv[0][1]).abs() < 1e-8);
    let variance = (inv[0][0] * inv[1][1] + inv[0][1] * inv[0][1]) / 10.0;
    assert!((entry["variance"].as_f64().unwrap() - variance).abs() < 1e-8);
}

#[test]
fn nodewise_certificate_holds_on_toy_design() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "nw.json", serde_json::json!({"x": data("x.csv"), "lambda_j": 0.1}));
    let out = json_stdout(&hdinfer(&["nodewise", "--config", cfg.to_str().unwrap()]));
    assert_eq!(out["max_surrogate_violation"].as_f64(), Some(0.0));
    assert_eq!(out["columns"].as_array().unwrap().len(), 2);
    assert_eq!(out["theta_hat"].as_array().unwrap().len(), 2);
}

#[test]
fn identity_precision_bound_is_one_over_n() {
    let out = json_stdout(&hdinfer(&["bound", "--config", data("bound_linear.json").to_str().unwrap()]));
    assert_eq!(out["bound"].as_f64(), Some(0.01));
    assert_eq!(out["bound_per_sample"].as_f64(), Some(1.0));
    assert_eq!(as_f64s(&out["direction"]), vec![1.0, 0.0, 0.0, 0.0, 0.0]);
}

#[test]
fn bound_kinds_match_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let run = |value: Value| {
        let cfg = write_config(dir.path(), "b.json", value);
        json_stdout(&hdinfer(&["bound", "--config", cfg.to_str().unwrap()]))
    };
    let minimax = run(serde_json::json!({"kind": "minimax", "n": 100, "p": 1000, "s": 5}));
    let expected = 0.1 + 5.0 * 1000f64.ln() / 100.0;
    assert!((minimax["rate"].as_f64().unwrap() - expected).abs() < 1e-15);

    let worst = run(serde_json::json!({"kind": "worst_subdirection", "theta0": [[2, 0], [0, 1]], "g_dot": [1, 1]}));
    // Θ₀ġ = (2, 1), ġᵀΘ₀ġ = 3
    assert_eq!(as_f64s(&worst["c0"]), vec![2.0 / 3.0, 1.0 / 3.0]);
    let h0 = as_f64s(&worst["h0"]);
    assert!((h0[0] - 2.0 / 3f64.sqrt()).abs() < 1e-15 && (h0[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);

    let lecam = run(serde_json::json!({"kind": "lecam", "fisher": [[4, 0], [0, 2]], "g_dot": [1, 1]}));
    assert!((lecam["bound_per_sample"].as_f64().unwrap() - 0.75).abs() < 1e-15);

    let ggm = run(serde_json::json!({"kind": "ggm", "theta0": {"identity": 2}, "xi1": [1, 0], "xi2": [0, 1], "n": 50}));
    // Θ₁₂ = 0 in an identity model: σ² = Θ₁₁Θ₂₂ = 1
    assert_eq!(ggm["bound"].as_f64(), Some(0.02));

    let compat = run(serde_json::json!({"kind": "compatibility", "sigma": [[2, 1], [1, 2]]}));
    assert!((compat["lower_bound"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn admissibility_flag_follows_beta0() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "b.json",
        serde_json::json!({"kind": "linear", "theta0": {"identity": 3}, "xi": [1, 0, 0], "n": 100,
                           "beta0": [1, 0, 0], "model_set": {"d_n": 1}}),
    );
    let out = json_stdout(&hdinfer(&["bound", "--config", cfg.to_str().unwrap()]));
    assert_eq!(out["admissible"], Value::Bool(true));
    let cfg = write_config(
        dir.path(),
        "b.json",
        serde_json::json!({"kind": "linear", "theta0": {"identity": 3}, "xi": [0, 1, 0], "n": 100,
                           "beta0": [1, 0, 0], "model_set": {"d_n": 1}}),
    );
    let out = json_stdout(&hdinfer(&["bound", "--config", cfg.to_str().unwrap()]));
    assert_eq!(out["admissible"], Value::Bool(false));
}

#[test]
fn unknown_subcommand_prints_usage_and_exits_1() {
    let out = hdinfer(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn config_errors_exit_1_and_runtime_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let dup = dir.path().join("dup.json");
    std::fs::write(&dup, r#"{"x": "a.csv", "x": "b.csv", "y": "y.csv"}"#).unwrap();
    let out = hdinfer(&["estimate", "--config", dup.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("duplicate field `x`"));

    let unknown = write_config(dir.path(), "u.json", serde_json::json!({"model": "ggm", "n": 10, "p": 3, "seeed": 1}));
    let out = hdinfer(&["experiment", "--config", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seeed"));

    let missing = hdinfer(&["estimate", "--config", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(1));

    let no_data = write_config(dir.path(), "m.json", serde_json::json!({"x": "absent.csv", "y": "absent.csv"}));
    let out = hdinfer(&["estimate", "--config", no_data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn overrides_are_echoed_in_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let out = hdinfer(&[
        "experiment",
        "--config",
        data("experiment.json").to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--set",
        "n=200",
        "--set",
        "R=4",
        "--set",
        "solver.tol=1e-9",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["config"]["n"], 200);
    assert_eq!(report["config"]["replications"], 4);
    assert_eq!(report["config"]["solver"]["tol"].as_f64(), Some(1e-9));
    assert_eq!(report["records"].as_array().unwrap().len(), 4);
    let timing: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json.timing.json")).unwrap()).unwrap();
    assert!(timing["wall_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn experiment_output_is_identical_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (k, workers) in ["1", "2", "4", "1"].iter().enumerate() {
        let path = dir.path().join(format!("r{k}.json"));
        let csv = dir.path().join(format!("r{k}.csv"));
        let out = hdinfer(&[
            "experiment",
            "--config",
            data("experiment.json").to_str().unwrap(),
            "--out",
            path.to_str().unwrap(),
            "--workers",
            workers,
            "--records-csv",
            csv.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        outputs.push((std::fs::read(&path).unwrap(), std::fs::read(&csv).unwrap()));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
    // header plus one row per replicate
    assert_eq!(String::from_utf8_lossy(&outputs[0].1).lines().count(), 17);
}

#[test]
fn help_lists_every_config_key() {
    let cases: [(&str, &[&str]); 6] = [
        ("experiment", &["model", "replications", "master_seed", "parallel_workers", "solver.tol", "solver.max_sweeps"]),
        ("estimate", &["x", "y", "target", "theta", "lambda", "variance_source", "solver.tol"]),
        ("nodewise", &["x", "lambda_j", "lambda_j_constant"]),
        ("ggm", &["entry", "include_t_hat", "level"]),
        ("bound", &["kind", "theta0", "xi1", "xi2", "g_dot", "fisher", "model_set"]),
        ("dataset", &["n", "p", "s", "signal", "covariance", "seed"]),
    ];
    for (sub, keys) in cases {
        let out = hdinfer(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0));
        let text = String::from_utf8_lossy(&out.stdout);
        for key in keys {
            assert!(text.lines().any(|l| l.trim_start().starts_with(&format!("{key} "))), "{sub} --help lacks {key}");
        }
    }
    let exp = String::from_utf8_lossy(&hdinfer(&["experiment", "--help"]).stdout).into_owned();
    for (key, _, _) in hdinfer::sim::CONFIG_KEYS {
        assert!(exp.contains(key), "experiment --help lacks {key}");
    }
}

#[test]
fn dataset_export_feeds_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_config(dir.path(), "ds.json", serde_json::json!({"n": 40, "p": 6, "s": 2, "signal": 2, "seed": 3}));
    let out_dir = dir.path().join("data");
    let out = hdinfer(&["dataset", "--config", spec.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["x.csv", "y.csv", "beta0.csv", "sigma0.csv", "theta0.csv", "manifest.json"] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
    let est = write_config(
        dir.path(),
        "est.json",
        serde_json::json!({"x": "data/x.csv", "y": "data/y.csv", "target": {"functional": [1, 1, 0, 0, 0, 0]}}),
    );
    let out = json_stdout(&hdinfer(&["estimate", "--config", est.to_str().unwrap()]));
    assert_eq!(out["n"], 40);
    assert_eq!(out["estimate"]["xi_l1"].as_f64(), Some(2.0));
    let b = as_f64s(&out["b_hat"]);
    assert!((out["estimate"]["value"].as_f64().unwrap() - (b[0] + b[1])).abs() < 1e-12);

    let no_out = hdinfer(&["dataset", "--config", spec.to_str().unwrap()]);
    assert_eq!(no_out.status.code(), Some(1));
}

#[test]
fn minimal_experiment_config_fills_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "min.json",
        serde_json::json!({"model": "linear_random_design", "n": 100, "p": 50, "s": 2, "R": 10, "master_seed": 7}),
    );
    let report = json_stdout(&hdinfer(&["experiment", "--config", cfg.to_str().unwrap()]));
    let c = &report["config"];
    assert_eq!(c["replications"], 10);
    assert_eq!(c["experiment"], "linear_inference");
    assert_eq!(c["level"].as_f64(), Some(0.95));
    assert_eq!(c["sigma_noise"].as_f64(), Some(1.0));
    assert_eq!(c["lambda_constant"].as_f64(), Some(std::f64::consts::SQRT_2));
    assert_eq!(c["target"], serde_json::json!({"coordinate": 0}));
    assert_eq!(c["solver"]["max_sweeps"], 100_000);
    assert_eq!(report["records"].as_array().unwrap().len(), 10);
    assert!(report["scope"].as_str().unwrap().len() > 20);
}
