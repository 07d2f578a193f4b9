use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn run(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fapprox"));
    cmd.args(args).env_remove("FAPPROX_BUDGET_ELEMENTS").env_remove("FAPPROX_BUDGET_VERTICES");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn verified_towers_exit_zero() {
    for name in ["se.graph", "p2.graph"] {
        let out = run(&["--format", "json", "tower", &data(name)], &[]);
        assert_eq!(out.status.code(), Some(0));
        let v = json(&out);
        assert_eq!(v["schema"], "fapprox-report/1");
        assert_eq!(v["status"], "verified");
        assert_eq!(v["exit_code"], 0);
    }
}

#[test]
fn small_budget_truncates() {
    let out = run(&["tower", &data("p2.graph")], &[("FAPPROX_BUDGET_ELEMENTS", "10")]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("tower: truncated"));
    assert!(text.contains("certified grade 1 of 2"));
}

#[test]
fn bad_input_reports_position() {
    let out = run(&["check-monoid", &data("bad.table")], &[]);
    assert_eq!(out.status.code(), Some(3));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("line 4, column 3"), "{text}");
    let missing = run(&["tower", &data("absent.graph")], &[]);
    assert_eq!(missing.status.code(), Some(3));
}

#[test]
fn json_is_deterministic() {
    let strip = |mut v: Value| {
        v["millis"] = Value::Null;
        if let Some(levels) = v["result"]["tower"]["levels"].as_array_mut() {
            for l in levels {
                l["millis"] = Value::Null;
            }
        }
        v
    };
    let args = ["--format", "json", "--seed", "7", "tower", &data("p2sym.graph")];
    let a = strip(json(&run(&args, &[])));
    let b = strip(json(&run(&args, &[])));
    assert_eq!(a, b);
}

#[test]
fn check_monoid_text() {
    let out = run(&["--format", "text", "check-monoid", &data("c2.table")], &[]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("inverse monoid: yes"));
    assert!(text.contains("F-inverse: yes"));
    let out = run(&["--format", "text", "check-monoid", &data("b2.table")], &[]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("F-inverse: no"));
    assert!(text.contains("maximal elements [0, 2, 3]"));
}

#[test]
fn fcover_sources_agree() {
    let cyclic = json(&run(&["--format", "json", "fcover", "--cyclic", "2"], &[]));
    let table = json(&run(&["--format", "json", "fcover", "--table", &data("c2.table")], &[]));
    let graph = json(&run(&["--format", "json", "fcover", "--graph", &data("c2_action.graph")], &[]));
    for v in [&cyclic, &table, &graph] {
        assert_eq!(v["exit_code"], 0);
        assert_eq!(v["result"]["mq_order"], 7);
        assert_eq!(v["result"]["t_order"], v["result"]["s_order"]);
        assert!(v["result"]["checks"].as_array().unwrap().iter().all(|c| c["holds"] == true));
    }
}

#[test]
fn diagnose_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(
        &["--format", "json", "--out", path.to_str().unwrap(), "diagnose-ce", "--level", "2", &data("p2.graph")],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["command"], "diagnose-ce");
    assert_eq!(v["exit_code"], 0);
}
