//! End-to-end runs of the `sixq` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use sixq::pipeline::from_json;

fn sixq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sixq"))
        .args(args)
        .output()
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("sixq-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn table_m6_writes_both_files() {
    let dir = scratch("table");
    let stem = dir.join("m6");
    let out = sixq(&[
        "table",
        "--N",
        "3",
        "--M",
        "6",
        "--out",
        stem.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let report = from_json(&std::fs::read_to_string(stem.with_extension("json")).unwrap()).unwrap();
    assert_eq!((report.params.n, report.params.m), (3, 6));
    assert_eq!(report.table[0].dimension, 4);
    let text = std::fs::read_to_string(stem.with_extension("txt")).unwrap();
    assert_eq!(text, String::from_utf8(out.stdout).unwrap());
    assert!(text.contains("19.949874371") && text.contains("(z^3-a1 mu^6)(z^3-a2)"));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn verify_m2_passes_and_json_parses() {
    let out = sixq(&["verify", "--M", "2", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let report = from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!(report.summary.all_pass() && report.summary.total > 0);
}

#[test]
fn failing_checks_give_exit_one() {
    let out = sixq(&["verify", "--M", "2", "--tol", "1e-300"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("failed checks"));
}

#[test]
fn invalid_configuration_gives_exit_two() {
    for args in [
        &["spectrum", "--N", "2"][..],
        &["spectrum", "--M", "13"],
        &["spectrum", "--M", "4", "--sector", "1"],
        &["spectrum", "--mu", "1.3", "--mu2", "1.3"],
        &["spectrum", "--mu", "abc"],
    ] {
        let out = sixq(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    }
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = scratch("config");
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, "N = 3\nM = 8\nseed = 5\nsectors = [6, 0, -6]\n").unwrap();
    let out = sixq(&[
        "drinfeld",
        "--config",
        cfg.to_str().unwrap(),
        "--M",
        "6",
        "--mu=-1.2+0.3i",
        "--json",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let r = from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!((r.config.m, r.config.seed), (6, 5));
    assert_eq!(r.config.sectors, Some(vec![6, 0, -6]));
    assert_eq!((r.config.mu.re, r.config.mu.im), (-1.2, 0.3));
    std::fs::write(&cfg, "N = 3\nunknown = 1\n").unwrap();
    assert_eq!(
        sixq(&["verify", "--config", cfg.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn sector_filter_restricts_spectrum() {
    let out = sixq(&["spectrum", "--M", "6", "--sector", "2,-2", "--json"]);
    let r = from_json(&String::from_utf8(out.stdout).unwrap()).unwrap();
    let secs: Vec<i32> = r.sectors.iter().map(|s| s.two_sz).collect();
    assert_eq!(secs, vec![2, -2]);
}

#[test]
fn even_n_notes_skipped_stage() {
    let out = sixq(&["all", "--N", "4", "--M", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("note: loop-algebra stage skipped"));
}
