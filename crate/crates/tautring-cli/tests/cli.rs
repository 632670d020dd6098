//! End-to-end runs of the binary: frozen counts, exit codes, determinism,
//! and the config file merge.

use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tautring"))
        .args(args)
        .env_remove("TAUTRING_BUDGET")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn temp_path(name: &str) -> PathBuf {
    let mut p = std::env::temp_dir();
    p.push(format!("tautring-cli-test-{}-{name}", std::process::id()));
    p
}

#[test]
fn enumerate_counts_and_exit_codes() {
    let out = run(&["enumerate", "--g", "0", "--n", "4", "--max-edges", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("4 stable graphs"));

    let out = run(&["enumerate", "--g", "1", "--n", "1", "--max-edges", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("2 stable graphs"));

    let out = run(&["enumerate", "--g", "0", "--n", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unstable"));
}

#[test]
fn enumerate_json_lists_generators() {
    let out = run(&[
        "enumerate", "--g", "0", "--n", "4", "--max-edges", "1", "--codim", "1", "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["graph_count"], 4);
    assert_eq!(v["generators"]["count"], 8);
}

#[test]
fn gorenstein_small_spaces_report_no_defect() {
    let out = run(&["gorenstein", "--g", "0", "--n", "5", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let ranks: Vec<u64> = v["pairings"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["rank"].as_u64().unwrap())
        .collect();
    assert_eq!(ranks, vec![1, 5, 1]);
    assert_eq!(v["socle"]["top_rank"], 1);
    assert_eq!(v["defect"], "none");

    let out = run(&["gorenstein", "--g", "1", "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("defect: none"));
}

#[test]
fn gorenstein_gates_the_infeasible_case() {
    let out = run(&["gorenstein", "--g", "2", "--n", "20"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("budget exceeded"));
    assert!(err.contains("not gorenstein (proven)"));
}

#[test]
fn verify_lemmas_passes_fails_and_restricts() {
    let out = run(&["verify-lemmas"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("all identities pass"));
    assert!(!text.contains("FAIL"));

    let out = run(&["verify-lemmas", "--inject-sign-error"]);
    assert_eq!(out.status.code(), Some(3));
    let text = stdout(&out);
    assert!(text.contains("elliptic tail self-intersection expansion: FAIL"));

    let out = run(&["verify-lemmas", "--g", "0", "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("forgetful inversion"));
    assert!(!text.contains("elliptic tail"));
}

#[test]
fn pullback_towers_match_the_frozen_counts() {
    let out = run(&["pullback", "--loops", "0", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["pullback"]["terms"].as_array().unwrap().len(), 1);
    assert_eq!(v["pullback"]["bielliptic_total"], "2");

    let out = run(&["pullback", "--loops", "1", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let counts = &v["pullback"]["classification_counts"];
    assert_eq!(counts["bielliptic multiple"], 12);
    assert_eq!(counts["tautological (no genus two vertex)"], 3);
    assert_eq!(counts["tautological (quotient cycle)"], 1);
    assert_eq!(v["pullback"]["bielliptic_total"], "48");
}

#[test]
fn pullback_ten_loops_blows_the_default_budget() {
    let out = run(&["pullback", "--loops", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("budget exceeded"));
}

#[test]
fn json_output_is_byte_deterministic() {
    let a = run(&["pullback", "--loops", "1", "--format", "json"]);
    let b = run(&["pullback", "--loops", "1", "--format", "json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);

    let a = run(&["verify-lemmas", "--seed", "99", "--format", "json"]);
    let b = run(&["verify-lemmas", "--seed", "99", "--format", "json"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let cfg = temp_path("config.json");
    std::fs::write(&cfg, r#"{"loops": 1, "format": "json", "budget": 30000}"#).unwrap();
    let cfg_arg = cfg.to_str().unwrap();

    let from_config = run(&["pullback", "--config", cfg_arg]);
    assert_eq!(from_config.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&from_config)).unwrap();
    assert_eq!(v["loops"], 1);

    let flags_win = run(&["pullback", "--config", cfg_arg, "--loops", "0"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&flags_win)).unwrap();
    assert_eq!(v["loops"], 0);

    let bad = temp_path("bad-config.json");
    std::fs::write(&bad, "not json").unwrap();
    let out = run(&["pullback", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    std::fs::remove_file(&cfg).ok();
    std::fs::remove_file(&bad).ok();
}

#[test]
fn out_flag_writes_the_report_to_a_file() {
    let path = temp_path("report.json");
    let out = run(&[
        "pullback", "--loops", "0", "--format", "json", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["pullback"]["bielliptic_total"], "2");
    std::fs::remove_file(&path).ok();
}

#[test]
fn budget_flag_and_env_are_honored() {
    let out = run(&["pullback", "--loops", "1", "--budget", "5"]);
    assert_eq!(out.status.code(), Some(2));

    let out = Command::new(env!("CARGO_BIN_EXE_tautring"))
        .args(["pullback", "--loops", "1"])
        .env("TAUTRING_BUDGET", "5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
