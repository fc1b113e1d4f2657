use std::path::PathBuf;
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn qseries(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qseries"))
        .args(args)
        .output()
        .unwrap()
}

fn temp_config(name: &str, text: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("qseries-{}-{name}.toml", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn evolve_rows_start_from_the_initial_state() {
    let cfg = config("rabi.toml");
    let out = qseries(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(lines.next(), Some("t index re im abs2"));
    assert_eq!(lines.next(), Some("0 0 1 0 1"));
    assert_eq!(lines.next(), Some("0 1 0 0 0"));
    assert_eq!(stdout.lines().count(), 1 + 2 * 9);
}

#[test]
fn structured_output_to_file_is_deterministic() {
    let cfg = config("density.toml");
    let dir = std::env::temp_dir();
    let a = dir.join(format!("qseries-{}-a.json", std::process::id()));
    let b = dir.join(format!("qseries-{}-b.json", std::process::id()));
    for path in [&a, &b] {
        let out = qseries(&[
            "density",
            "--config",
            cfg.to_str().unwrap(),
            "--format",
            "structured",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    let parsed: qseries::cli::ResultSet = serde_json::from_slice(&first).unwrap();
    assert_eq!(parsed.command, "density");
    assert_eq!(parsed.samples.len(), 4 * 7);
}

#[test]
fn order_override_changes_accuracy() {
    let cfg = config("rabi.toml");
    let run = |order: &str| {
        let out = qseries(&[
            "evolve",
            "--config",
            cfg.to_str().unwrap(),
            "--order",
            order,
            "--format",
            "structured",
        ]);
        let res: qseries::cli::ResultSet = serde_json::from_slice(&out.stdout).unwrap();
        res.metrics["oracle_max_error"]
    };
    assert!(run("2") > 1e-4);
    assert!(run("8") < 1e-6);
}

#[test]
fn validation_error_exits_with_2() {
    let cfg = temp_config("bad", "command = \"evolve\"\n[system]\nenergies = [0.0, 1.0]\nh1 = [[[0.0, 0.0]], [[0.0, 0.0]]]\n");
    let out = qseries(&["evolve", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("system.h1[0]"));
}

#[test]
fn budget_error_exits_with_3() {
    let text = std::fs::read_to_string(config("ptcheck.toml"))
        .unwrap()
        .replace(
            "order = 4",
            "order = 4\npath_budget = 10\nevaluator = \"paths\"",
        );
    let cfg = temp_config("budget", &text);
    let out = qseries(&["propagate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn failed_check_exits_with_4() {
    let text = std::fs::read_to_string(config("ptcheck.toml"))
        .unwrap()
        .replace("oracle = 1e-9", "oracle = 1e-300");
    let cfg = temp_config("strict", &text);
    let out = qseries(&["ptcheck", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn missing_file_exits_with_1() {
    let out = qseries(&["evolve", "--config", "/nonexistent/qseries.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_without_config() {
    let out = qseries(&["verify", "--seed", "3"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert_eq!(stderr.lines().filter(|l| l.ends_with(" ok")).count(), 10);
}

#[test]
fn every_sample_config_runs() {
    for (command, file) in [
        ("coeffs", "coeffs.toml"),
        ("propagate", "propagate.toml"),
        ("lattice", "lattice.toml"),
        ("ptcheck", "ptcheck.toml"),
        ("verify", "verify.toml"),
    ] {
        let cfg = config(file);
        let out = qseries(&[command, "--config", cfg.to_str().unwrap()]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{command}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
