//! Binary-level behavior: flag/config merging, output formats, exit codes,
//! and byte-identical reruns.

use std::path::Path;
use std::process::{Command, Output};

fn misfit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_misfit"))
        .args(args)
        .env_remove("MISFIT_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn bound_reports_reference_values() {
    let out = misfit(&[
        "bound",
        "--model",
        "gaussian-wrong-mean",
        "--mu-bar",
        "1",
        "--sigma2-bar",
        "4",
        "-M",
        "10",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("theta0_1 = 5"), "{text}");
    assert!(text.contains("mcrb_11 = 4.8"), "{text}");
    assert!(text.contains("lb_11 = 5.8"), "{text}");
    assert!(text.contains("crb_11 = 3.2"), "{text}");
}

#[test]
fn bound_matched_case_collapses_to_crb() {
    let out = misfit(&[
        "bound",
        "--model",
        "gaussian-wrong-mean",
        "--mu-bar",
        "0",
        "--sigma2-bar",
        "4",
        "-M",
        "10",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("mcrb_11 = 3.2"), "{text}");
    assert!(text.contains("crb_11 = 3.2"), "{text}");
}

#[test]
fn sweep_emits_contracted_header_and_rows() {
    let out = misfit(&[
        "sweep",
        "--model",
        "ar1-power",
        "--sigma2-bar",
        "4",
        "-N",
        "8",
        "--param",
        "rho",
        "--grid",
        "0:0.75:0.25",
        "--trials",
        "400",
        "-M",
        "24",
        "--seed",
        "42",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sweep_param,sweep_value,M,trials,theta0,mcrb,lb,crb,sample_mcrb,emp_cov,emp_mse,\
         bias,stderr_cov,failures"
    );
    assert_eq!(text.lines().count(), 5, "4 grid rows expected:\n{text}");
}

#[test]
fn exit_codes_follow_error_classes() {
    // Unknown flag: parse error 64.
    let out = misfit(&["bound", "--model", "gaussian-wrong-mean", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(64));

    // Out-of-domain hyperparameter: 65.
    let out = misfit(&[
        "bound",
        "--model",
        "gaussian-wrong-mean",
        "--mu-bar",
        "1",
        "--sigma2-bar",
        "-4",
        "-M",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(65));

    // Hyperparameter that does not apply to the model: 65.
    let out = misfit(&[
        "bound",
        "--model",
        "ar1-power",
        "--mu-bar",
        "1",
        "--rho",
        "0.5",
        "--sigma2-bar",
        "4",
        "-N",
        "8",
        "-M",
        "24",
    ]);
    assert_eq!(out.status.code(), Some(65));

    // Missing capability (no closed forms for the scatter pair): 65.
    let out = misfit(&[
        "bound",
        "--model",
        "complex-t-scatter",
        "--lambda",
        "2",
        "--eta",
        "1",
        "-N",
        "2",
        "-M",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(65));
}

#[test]
fn config_file_provides_everything_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        r#"
command = "bound"
master_seed = 7

[model]
id = "gaussian-wrong-mean"
mu_bar = 1.0
sigma2_bar = 4.0

[bound]
m = 10
"#,
    )
    .unwrap();
    let out = misfit(&["--config", cfg.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("mcrb_11 = 4.8"));

    // Flag overrides the config's mean.
    let out = misfit(&["bound", "--config", cfg.to_str().unwrap(), "--mu-bar", "0"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("mcrb_11 = 3.2"));
}

#[test]
fn config_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "command = \"bound\"\ntypo_key = 1\n").unwrap();
    let out = misfit(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn seed_env_variable_matches_flag() {
    let run_flag = misfit(&[
        "estimate",
        "--model",
        "gaussian-wrong-mean",
        "--mu-bar",
        "1",
        "--sigma2-bar",
        "4",
        "-M",
        "50",
        "--seed",
        "99",
    ]);
    let run_env = Command::new(env!("CARGO_BIN_EXE_misfit"))
        .args([
            "estimate",
            "--model",
            "gaussian-wrong-mean",
            "--mu-bar",
            "1",
            "--sigma2-bar",
            "4",
            "-M",
            "50",
        ])
        .env("MISFIT_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(stdout(&run_flag), stdout(&run_env));
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn identical_invocations_write_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    let args = |out: &Path| {
        vec![
            "sweep".to_string(),
            "--model".into(),
            "gaussian-wrong-mean".into(),
            "--sigma2-bar".into(),
            "4".into(),
            "--param".into(),
            "mu_bar".into(),
            "--grid".into(),
            "0,1".into(),
            "--trials".into(),
            "500".into(),
            "-M".into(),
            "10".into(),
            "--seed".into(),
            "31".into(),
            "--out".into(),
            out.to_str().unwrap().to_string(),
        ]
    };
    let a = Command::new(env!("CARGO_BIN_EXE_misfit"))
        .args(args(&out_a))
        .output()
        .unwrap();
    let b = Command::new(env!("CARGO_BIN_EXE_misfit"))
        .args(args(&out_b))
        .output()
        .unwrap();
    assert!(a.status.success() && b.status.success());
    assert_eq!(read(&out_a), read(&out_b));

    // The sidecar exists, parses, and records the seed.
    let meta: serde_json::Value =
        serde_json::from_slice(&read(&dir.path().join("a.meta.json"))).unwrap();
    assert_eq!(meta["master_seed"], 31);
    assert_eq!(meta["command"], "sweep");
    assert_eq!(meta["model"]["id"], "gaussian-wrong-mean");
}

#[test]
fn estimate_csv_has_record_columns() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("est.csv");
    let out = misfit(&[
        "estimate",
        "--model",
        "ar1-power",
        "--rho",
        "0.5",
        "--sigma2-bar",
        "4",
        "-N",
        "4",
        "-M",
        "100",
        "--seed",
        "5",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(read(&out_path)).unwrap();
    assert!(
        text.starts_with("theta_hat_1,M,method,seed,grad_norm,iterations\n"),
        "{text}"
    );
}

#[test]
fn consistency_and_bayes_commands_emit_tables() {
    let out = misfit(&[
        "consistency",
        "--model",
        "gaussian-wrong-mean",
        "--mu-bar",
        "1",
        "--sigma2-bar",
        "4",
        "--grid",
        "100,1000",
        "--trials",
        "50",
        "--seed",
        "2",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("M,median_err,mean_err,mean_err_se,sandwich_ratio\n"));

    let out = misfit(&[
        "bayes",
        "--model",
        "gaussian-wrong-mean",
        "--mu-bar",
        "1",
        "--sigma2-bar",
        "4",
        "--grid",
        "100,1000",
        "--seed",
        "2",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("posterior mean"));
}
