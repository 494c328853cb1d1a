//! End-to-end tests for the monitor subcommand: exit codes, report and
//! plot outputs, byte reproducibility, output-path precedence.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_eigenwatch")
}

fn run(dir: &Path, args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.current_dir(dir).args(args);
    for (key, value) in envs {
        cmd.env(key, value);
    }
    cmd.output().expect("binary runs")
}

const NULL_CONFIG: &str = r#"
schema = 1

[sim]
p1 = 50
p2 = 50
t_len = 200
scenario = "null"
seed = 7

[detector]
k1 = 3
m = 20
family = "ps:0"
alpha = 0.05
rng_seed = 1

[output]
report = "report.json"
plot = "plot.tsv"
"#;

const BREAK_CONFIG: &str = r#"
schema = 1

[sim]
p1 = 50
p2 = 50
t_len = 200
scenario = "loading-switch"
t_star = 100
seed = 3

[detector]
k1 = 3
m = 20
family = "ps:0"
alpha = 0.05
rng_seed = 1

[output]
report = "report.json"
"#;

#[test]
fn null_run_exits_zero_and_writes_both_outputs() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.toml"), NULL_CONFIG).unwrap();
    let out = run(dir.path(), &["monitor", "--config", "run.toml"], &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"]["rejected"], serde_json::Value::Bool(false));
    assert_eq!(report["training_window"], serde_json::json!([0, 20]));
    assert!(report["timing_seconds"].is_null() || report.get("timing_seconds").is_none());

    let plot = fs::read_to_string(dir.path().join("plot.tsv")).unwrap();
    let lines: Vec<&str> = plot.lines().collect();
    assert_eq!(lines[0], "tau\tlambda\tpsi\ty\ts\tstatistic\tthreshold");
    assert_eq!(lines.len(), 1 + 180, "header plus one row per monitored step");
}

#[test]
fn detected_break_exits_two_with_a_plausible_alarm_time() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.toml"), BREAK_CONFIG).unwrap();
    let out = run(dir.path(), &["monitor", "--config", "run.toml"], &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    let tau_hat = report["verdict"]["tau_hat"].as_u64().unwrap();
    // Break enters the statistic at tau = t_star - m = 80.
    assert!((81..=95).contains(&tau_hat), "tau_hat = {tau_hat}");
}

#[test]
fn reports_are_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.toml"), NULL_CONFIG).unwrap();
    run(dir.path(), &["monitor", "--config", "run.toml"], &[]);
    let first = fs::read(dir.path().join("report.json")).unwrap();
    let first_plot = fs::read(dir.path().join("plot.tsv")).unwrap();
    run(dir.path(), &["monitor", "--config", "run.toml"], &[]);
    let second = fs::read(dir.path().join("report.json")).unwrap();
    let second_plot = fs::read(dir.path().join("plot.tsv")).unwrap();
    assert_eq!(first, second);
    assert_eq!(first_plot, second_plot);
}

#[test]
fn output_paths_resolve_flag_over_env_over_file() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.toml"), NULL_CONFIG).unwrap();

    let out = run(
        dir.path(),
        &["monitor", "--config", "run.toml"],
        &[("EIGENWATCH_REPORT_PATH", "env_report.json")],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("env_report.json").is_file());
    assert!(!dir.path().join("report.json").exists());

    let out = run(
        dir.path(),
        &["monitor", "--config", "run.toml", "--report", "flag_report.json"],
        &[("EIGENWATCH_REPORT_PATH", "ignored.json")],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("flag_report.json").is_file());
    assert!(!dir.path().join("ignored.json").exists());
}

#[test]
fn timing_flag_adds_the_only_nondeterministic_field() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("run.toml"), NULL_CONFIG).unwrap();
    let out = run(dir.path(), &["monitor", "--config", "run.toml", "--timing"], &[]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert!(report["timing_seconds"].as_f64().unwrap() > 0.0);
}

#[test]
fn missing_input_file_exits_one_with_an_error_message() {
    let dir = TempDir::new().unwrap();
    let config = r#"
schema = 1

[input]
path = "does_not_exist.csv"

[detector]
k1 = 3
m = 20
family = "ps:0"
alpha = 0.05

[output]
"#;
    fs::write(dir.path().join("run.toml"), config).unwrap();
    let out = run(dir.path(), &["monitor", "--config", "run.toml"], &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn unknown_config_keys_exit_one() {
    let dir = TempDir::new().unwrap();
    let config = NULL_CONFIG.replace("[output]", "typo_key = 1\n\n[output]");
    fs::write(dir.path().join("run.toml"), config).unwrap();
    let out = run(dir.path(), &["monitor", "--config", "run.toml"], &[]);
    assert_eq!(out.status.code(), Some(1));
}
