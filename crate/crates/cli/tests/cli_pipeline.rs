//! Cross-subcommand pipelines: export -> monitor parity with in-process
//! simulation, export -> estimate-k, and the calibrate cache lifecycle.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_eigenwatch")
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

const DETECTOR_BLOCK: &str = r#"
[detector]
k1 = 3
m = 20
family = "ps:0"
alpha = 0.05
rng_seed = 1

[output]
report = "report.json"
"#;

fn verdict(dir: &Path) -> serde_json::Value {
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    report["verdict"].clone()
}

#[test]
fn exported_files_reproduce_the_in_process_verdict() {
    let dir = TempDir::new().unwrap();
    let sim_args = [
        "--p1", "50", "--p2", "50", "--t-len", "200",
        "--scenario", "loading-switch", "--t-star", "100", "--seed", "3",
    ];
    for format in ["series.csv", "series.mcpd"] {
        let out = run(
            dir.path(),
            &[&["export", "--output", format], &sim_args[..]].concat(),
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }

    let sim_config = format!(
        "schema = 1\n\n[sim]\np1 = 50\np2 = 50\nt_len = 200\nscenario = \"loading-switch\"\nt_star = 100\nseed = 3\n{DETECTOR_BLOCK}"
    );
    fs::write(dir.path().join("sim.toml"), sim_config).unwrap();
    let out = run(dir.path(), &["monitor", "--config", "sim.toml"]);
    assert_eq!(out.status.code(), Some(2));
    let reference = verdict(dir.path());

    for path in ["series.csv", "series.mcpd"] {
        let config = format!("schema = 1\n\n[input]\npath = \"{path}\"\n{DETECTOR_BLOCK}");
        fs::write(dir.path().join("file.toml"), config).unwrap();
        let out = run(dir.path(), &["monitor", "--config", "file.toml"]);
        assert_eq!(out.status.code(), Some(2), "{path}");
        assert_eq!(verdict(dir.path()), reference, "{path}");
    }
}

#[test]
fn estimate_k_recovers_the_generating_factor_counts() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &[
            "export", "--output", "series.mcpd",
            "--p1", "30", "--p2", "20", "--t-len", "200", "--seed", "11",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    let out = run(dir.path(), &["estimate-k", "--input", "series.mcpd"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("k1_hat = 3"), "{stdout}");
    assert!(stdout.contains("k2_hat = 3"), "{stdout}");
}

#[test]
fn calibrate_reuses_its_cache_on_the_second_run() {
    let dir = TempDir::new().unwrap();
    let args = [
        "calibrate",
        "--weights", "0.3", "--alphas", "0.1",
        "--paths", "2000", "--steps", "128", "--seed", "9",
        "--cache", "cache.json",
    ];
    let first = run(dir.path(), &args);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stderr));
    let first_line = String::from_utf8(first.stdout).unwrap();
    assert!(first_line.contains("(computed)"), "{first_line}");

    let second = run(dir.path(), &args);
    assert_eq!(second.status.code(), Some(0));
    let second_line = String::from_utf8(second.stdout).unwrap();
    assert!(second_line.contains("(cached)"), "{second_line}");
    assert_eq!(
        first_line.replace("(computed)", "(cached)"),
        second_line,
        "cached value must match the computed one"
    );
}

#[test]
fn simulate_renders_a_table_and_matching_json() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &[
            "simulate",
            "--cell", "10,8,6", "--t-len", "40", "--reps", "8",
            "--scenario", "null", "--families", "ps:0,wc",
            "--seed", "5", "--json", "table.json",
        ],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("ps(0)@0.05"), "{stdout}");
    assert!(stdout.contains("wc@0.1"), "{stdout}");

    let table: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("table.json")).unwrap()).unwrap();
    assert_eq!(table["n_reps"], serde_json::json!(8));
    assert_eq!(table["cells"][0]["entries"].as_array().unwrap().len(), 4);
}
