//! End-to-end checks of the command-line interface: output file shapes,
//! config validation at the process boundary, and exit codes.

use std::path::Path;
use std::process::{Command, Output};

use kglearn::GaussianBelief;

fn run_cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kglearn"))
        .args(args)
        .output()
        .expect("spawn kglearn binary")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).expect("write config");
    path.to_str().expect("utf-8 path").to_string()
}

const SMALL_CONFIG: &str = r#"{
    "M": 5,
    "d": 2,
    "N": 3,
    "replications": 2,
    "seed": 7,
    "policies": ["kg", "random"]
}"#;

#[test]
fn synth_writes_one_curve_row_per_policy_and_step() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "config.json", SMALL_CONFIG);
    let out = dir.path().join("curves.csv");
    let result = run_cli(&["synth", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );

    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "policy,step,mean_oc,stderr_oc");
    assert_eq!(lines.len(), 1 + 2 * 3, "two policies, three steps each");
    for policy in ["kg", "random"] {
        for step in 1..=3 {
            let prefix = format!("{policy},{step},");
            assert!(
                lines.iter().any(|l| l.starts_with(&prefix)),
                "missing row {prefix}"
            );
        }
    }
}

#[test]
fn seed_override_changes_the_curves() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "config.json", SMALL_CONFIG);
    let base = dir.path().join("base.csv");
    let reseeded = dir.path().join("reseeded.csv");
    for (out, extra) in [(&base, None), (&reseeded, Some("--seed"))] {
        let mut args = vec!["synth", "--config", &config, "--out", out.to_str().unwrap()];
        if let Some(flag) = extra {
            args.push(flag);
            args.push("8");
        }
        let result = run_cli(&args);
        assert!(result.status.success());
    }
    let a = std::fs::read(&base).unwrap();
    let b = std::fs::read(&reseeded).unwrap();
    assert_ne!(a, b, "a different seed draws a different instance");
}

#[test]
fn zero_replications_is_rejected_at_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "config.json",
        r#"{"M": 4, "d": 2, "N": 3, "replications": 0}"#,
    );
    let out = dir.path().join("curves.csv");
    let result = run_cli(&["synth", "--config", &config, "--out", out.to_str().unwrap()]);
    assert!(!result.status.success());
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("replication"), "stderr: {stderr}");
    assert!(!out.exists(), "no output file on a rejected config");
}

#[test]
fn malformed_and_missing_configs_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let garbage = write_config(dir.path(), "garbage.json", "{ not json");
    let out = dir.path().join("curves.csv");

    let result = run_cli(&[
        "synth",
        "--config",
        &garbage,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!result.status.success());
    assert!(String::from_utf8_lossy(&result.stderr).starts_with("error:"));

    let missing = dir.path().join("nope.json");
    let result = run_cli(&[
        "synth",
        "--config",
        missing.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!result.status.success());
}

#[test]
fn unknown_policy_override_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "config.json", SMALL_CONFIG);
    let out = dir.path().join("curves.csv");
    let result = run_cli(&[
        "synth",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--policies",
        "kg,disc",
    ]);
    assert!(!result.status.success());
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("disc"), "stderr: {stderr}");
}

#[test]
fn snapshot_writes_score_rows_and_belief_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "config.json",
        r#"{"M": 4, "d": 2, "N": 3, "seed": 5}"#,
    );
    let out = dir.path().join("snapshot.csv");
    let belief = dir.path().join("belief.json");
    let result = run_cli(&[
        "snapshot",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
        "--belief-out",
        belief.to_str().unwrap(),
    ]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );

    let text = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "iteration,alternative_index,kg,nu_tilde,predict");
    assert_eq!(lines.len(), 1 + 3 * 4, "N iterations times M alternatives");

    let posterior: GaussianBelief =
        serde_json::from_str(&std::fs::read_to_string(&belief).unwrap()).unwrap();
    assert_eq!(posterior.dim(), 3, "d features plus the intercept");
}

#[test]
fn dataset_subcommand_requires_a_dataset_key() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "config.json", SMALL_CONFIG);
    let out = dir.path().join("curves.csv");
    let result = run_cli(&[
        "dataset",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(!result.status.success());
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("dataset"), "stderr: {stderr}");
}

#[test]
fn validate_reports_every_oracle_suite_as_pass() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "config.json", r#"{"seed": 2}"#);
    let result = run_cli(&["validate", "--config", &config]);
    assert!(
        result.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&result.stderr)
    );
    let stdout = String::from_utf8_lossy(&result.stdout);
    let pass_lines = stdout.lines().filter(|l| l.starts_with("PASS")).count();
    assert_eq!(pass_lines, 7, "stdout: {stdout}");
    assert!(!stdout.contains("FAIL"), "stdout: {stdout}");
}
