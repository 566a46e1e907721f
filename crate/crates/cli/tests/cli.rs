use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_pac-mcts");

const SMALL: &str = r#"{
    "instance": {"type": "single_gap", "arms": 6, "gap": 0.5},
    "bias": {"kind": "top_k_adversarial", "k": 2},
    "bias_bounds": [0.0, 0.05],
    "sigmas": [0.3],
    "budgets": [120],
    "radius_factors": [0.5],
    "policies": [{"policy": "strict_pac"}, {"policy": "uct"}, {"policy": "proportion", "a": 0.3}],
    "replications": 40,
    "base_seed": 9
}"#;

fn pac(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("PAC_MCTS_OUT")
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn sweep_writes_both_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL);
    let out = dir.path().join("out");
    let o = pac(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows = pac_mcts::harness::parse_sweep_csv(&csv).unwrap();
    assert_eq!(rows.len(), 6);
    let lines = fs::read_to_string(out.join("records.jsonl")).unwrap();
    assert_eq!(
        pac_mcts::harness::parse_record_lines(&lines).unwrap().len(),
        240
    );
}

#[test]
fn sweeps_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", SMALL);
    let mut outputs = Vec::new();
    for (i, workers) in ["1", "3", "1"].iter().enumerate() {
        let out = dir.path().join(format!("out{i}"));
        let o = pac(&[
            "sweep",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        outputs.push((
            fs::read(out.join("sweep.csv")).unwrap(),
            fs::read(out.join("records.jsonl")).unwrap(),
        ));
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn invalid_delta_exits_two_and_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SMALL.replace("\"replications\"", "\"delta\": 1.5, \"replications\"");
    let cfg = write(dir.path(), "c.json", &bad);
    let o = pac(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("delta"), "{}", stderr(&o));
    assert!(!dir.path().join("sweep.csv").exists());
}

#[test]
fn empty_grid_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", &SMALL.replace("[120]", "[]"));
    let o = pac(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("budgets"), "{}", stderr(&o));
}

#[test]
fn missing_config_exits_two() {
    let o = pac(&["run", "--config", "/nonexistent/run.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = pac(&["sweep"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn existing_results_need_force() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.json",
        r#"{"instance": {"type": "single_gap", "arms": 4, "gap": 1.0}, "sigma": 0.2,
            "budget": 40, "policy": {"policy": "strict_pac"}, "seed": 3}"#,
    );
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        pac(&["run", "--config", &cfg, "--out", out]).status.code(),
        Some(0)
    );
    let first = fs::read(dir.path().join("run_record.json")).unwrap();
    let o = pac(&["run", "--config", &cfg, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--force"));
    let o = pac(&["run", "--config", &cfg, "--out", out, "--force"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(dir.path().join("run_record.json")).unwrap(), first);

    let o = pac(&[
        "run", "--config", &cfg, "--out", out, "--force", "--seed", "4",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let record: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("run_record.json")).unwrap()).unwrap();
    assert_eq!(record["correct"], true);
}

#[test]
fn out_dir_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "r.json",
        r#"{"instance": {"type": "means", "means": [0.0, 1.0]}, "sigma": 0.0,
            "budget": 10, "policy": {"policy": "uct"}}"#,
    );
    let out = dir.path().join("env_out");
    let o = Command::new(BIN)
        .args(["run", "--config", &cfg])
        .env("PAC_MCTS_OUT", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let record: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("run_record.json")).unwrap()).unwrap();
    assert_eq!(record["selected_arm"], 1);
    assert_eq!(record["correct"], true);
}

#[test]
fn theory_reports_bounds_and_verdicts() {
    let o = pac(&["theory", "--gap", "1", "--sigma", "1", "--arms", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for label in [
        "u_stat",
        "u_dist",
        "upper bound (search)",
        "upper bound (Lambert W)",
        "lower bound",
    ] {
        let line = text.lines().find(|l| l.starts_with(label)).unwrap();
        let value = line.split_whitespace().last().unwrap();
        assert!(value.parse::<f64>().unwrap().is_finite(), "{line}");
    }
    assert!(text.contains("degradation cap          0\n"), "{text}");

    let o = pac(&[
        "theory", "--gap", "0.25", "--bias", "0.0625", "--sigma", "0.3", "--arms", "50",
    ]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(
        text.contains("upper bound (search)     infeasible separation"),
        "{text}"
    );

    let o = pac(&[
        "theory", "--gap", "2.91", "--bias", "1.5", "--sigma", "3.5", "--arms", "10",
    ]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("gap structurally reversed"), "{text}");

    let o = pac(&["theory", "--gap", "1", "--sigma", "1", "--delta", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = pac(&["theory", "--gap", "one", "--sigma", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn safety_ablation_preset_rows() {
    let dir = tempfile::tempdir().unwrap();
    let mut config: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../configs/safety_ablation.json"
        ))
        .unwrap(),
    )
    .unwrap();
    config["replications"] = 5.into();
    let cfg = write(dir.path(), "t.json", &config.to_string());
    let o = pac(&[
        "sweep",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let rows = pac_mcts::harness::parse_sweep_csv(&csv).unwrap();
    // 4 bias fractions x 5 radius factors x 2 policies.
    assert_eq!(rows.len(), 40);
}

#[test]
fn verify_with_small_suite() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "v.json",
        r#"{"coverage": {"sigma": 0.3, "delta": 0.05, "bias_bound": 0.1, "m_count": 4,
                         "horizon": 200, "trials": 500, "seed": 1},
            "minimality": {"trials": 100, "seed": 1}}"#,
    );
    let o = pac(&[
        "verify",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("verify_report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    assert!(report["safety"].is_null());

    // A radius a third of the proven width cannot hold the coverage guarantee.
    let cfg = write(
        dir.path(),
        "bad.json",
        r#"{"coverage": {"sigma": 0.3, "delta": 0.05, "bias_bound": 0.1, "radius_factor": 0.3,
                         "m_count": 4, "horizon": 200, "trials": 500, "seed": 1}}"#,
    );
    let o = pac(&[
        "verify",
        "--config",
        &cfg,
        "--out",
        dir.path().to_str().unwrap(),
        "--force",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("coverage"));
}
