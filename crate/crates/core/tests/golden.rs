//! Golden-file regression and determinism of the pipeline reports.
//!
//! Regenerate the stored reports with `SIXQ_BLESS=1 cargo test -p sixq-core --test golden`.

use std::path::PathBuf;

use serde_json::Value;
use sixq::pipeline::{emit_report, from_json, run, to_json, Command, RunConfig, SCHEMA};

/// Numbers agree to this relative tolerance, or absolutely below `ABS`.
const REL: f64 = 1e-6;
const ABS: f64 = 1e-9;

fn golden_path(m: usize) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("tests/golden/n3_m{m}_table.json"))
}

fn config(m: usize) -> RunConfig {
    RunConfig {
        m,
        command: Command::Table,
        ..RunConfig::default()
    }
}

/// Walks both trees and records every mismatch; strings must match exactly except
/// under `params`/`note` keys, whose embedded numbers are rounding-sensitive.
fn compare(path: &str, a: &Value, b: &Value, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            if (x - y).abs() > ABS.max(REL * x.abs().max(y.abs())) {
                out.push(format!("{path}: {x} vs {y}"));
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                out.push(format!("{path}: length {} vs {}", x.len(), y.len()));
                return;
            }
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                compare(&format!("{path}[{i}]"), u, v, out);
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            for (k, u) in x {
                match y.get(k) {
                    Some(v) if matches!(k.as_str(), "params" | "note") && u.is_string() => {
                        if u.is_string() != v.is_string() {
                            out.push(format!("{path}.{k}: type"));
                        }
                    }
                    Some(v) => compare(&format!("{path}.{k}"), u, v, out),
                    None => out.push(format!("{path}.{k}: missing")),
                }
            }
            if x.len() != y.len() {
                out.push(format!("{path}: key count {} vs {}", x.len(), y.len()));
            }
        }
        _ if a == b => {}
        _ => out.push(format!("{path}: {a} vs {b}")),
    }
}

fn check_golden(m: usize) {
    let report = run(&config(m)).unwrap();
    let path = golden_path(m);
    if std::env::var_os("SIXQ_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, to_json(&report).unwrap()).unwrap();
    }
    let stored: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let fresh: Value = serde_json::from_str(&to_json(&report).unwrap()).unwrap();
    let mut diffs = Vec::new();
    compare("$", &stored, &fresh, &mut diffs);
    assert!(
        diffs.is_empty(),
        "{} differences, first: {:?}",
        diffs.len(),
        &diffs[..diffs.len().min(10)]
    );
    assert!(report.summary.all_pass());
}

#[test]
fn golden_m5() {
    check_golden(5);
}

#[test]
fn golden_m6() {
    check_golden(6);
}

#[test]
fn golden_m8() {
    check_golden(8);
}

#[test]
fn stored_reports_parse() {
    for m in [5, 6, 8] {
        let r = from_json(&std::fs::read_to_string(golden_path(m)).unwrap()).unwrap();
        assert_eq!(r.schema, SCHEMA);
        assert_eq!(r.config, config(m));
    }
}

#[test]
fn same_seed_gives_identical_files() {
    let dir = std::env::temp_dir().join(format!("sixq-det-{}", std::process::id()));
    let cfg = RunConfig {
        m: 6,
        ..RunConfig::default()
    };
    for name in ["a", "b"] {
        emit_report(&run(&cfg).unwrap(), &dir.join(name)).unwrap();
    }
    for ext in ["json", "txt"] {
        let a = std::fs::read(dir.join(format!("a.{ext}"))).unwrap();
        let b = std::fs::read(dir.join(format!("b.{ext}"))).unwrap();
        assert!(a == b, "{ext} differs");
    }
    let back = from_json(&std::fs::read_to_string(dir.join("a.json")).unwrap()).unwrap();
    assert_eq!(back, run(&cfg).unwrap());
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn different_seed_changes_verification_draws() {
    let a = run(&RunConfig {
        m: 4,
        command: Command::Verify,
        ..RunConfig::default()
    })
    .unwrap();
    let b = run(&RunConfig {
        m: 4,
        seed: 7,
        command: Command::Verify,
        ..RunConfig::default()
    })
    .unwrap();
    assert_ne!(to_json(&a).unwrap(), to_json(&b).unwrap());
    assert!(a.summary.all_pass() && b.summary.all_pass());
}

#[test]
fn m8_table_row_renders() {
    let text = sixq::pipeline::render_text(&run(&config(8)).unwrap());
    let row = text
        .lines()
        .find(|l| l.starts_with("6    0.2500"))
        .expect("k = pi/4 row");
    assert!(row.contains("38.971") && row.contains("0.0680614"), "{row}");
}
