use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const GOOD: &str = "replace-missing,independent-components,decision-tree";
const SWAPPED: &str = "independent-components,replace-missing,decision-tree";

fn avatar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avatar")).current_dir(dir).args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn effective_config(out: &Output) -> Value {
    let stderr = String::from_utf8_lossy(&out.stderr);
    let line = stderr.lines().find(|l| l.starts_with("{\"command\"")).expect("config echo");
    serde_json::from_str(line).unwrap()
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = avatar(dir.path(), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn missing_required_option_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(avatar(dir.path(), &["learn-kb"]).status.code(), Some(2));
    assert_eq!(avatar(dir.path(), &["eval", "--data", "bundled:nope", "--steps", "zero-r"]).status.code(), Some(2));
}

#[test]
fn learned_kb_separates_the_two_orders() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(avatar(d, &["gen-synthetic", "--out", "suite"]).status.success());
    assert!(avatar(d, &["learn-kb", "--suite", "suite", "--out", "kb.json"]).status.success());

    let base = ["eval", "--data", "bundled:numeric-missing", "--kb", "kb.json", "--t-method", "--steps"];
    let good = avatar(d, &[&base[..], &[GOOD]].concat());
    assert_eq!(good.status.code(), Some(0));
    let v = stdout_json(&good);
    assert_eq!(v["valid"], true);
    assert_eq!(v["t_method"]["valid"], true);
    assert_eq!(v["tokens"].as_array().unwrap().len(), 4);

    let bad = avatar(d, &[&base[..], &[SWAPPED]].concat());
    assert_eq!(bad.status.code(), Some(0));
    let v = stdout_json(&bad);
    assert_eq!(v["valid"], false);
    assert_eq!(v["failing_component"], "independent-components");
    assert_eq!(v["failing_characteristics"], serde_json::json!(["MISSING_VALUES"]));
    assert_eq!(v["t_method"]["valid"], false);
    assert_eq!(v["t_method"]["failing_component"], "independent-components");
    assert!(String::from_utf8_lossy(&bad.stderr).contains("preprocessing order"));
}

#[test]
fn pipeline_files_and_pool_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(avatar(d, &["dump-pool", "--out", "pool.json"]).status.success());
    let steps = r#"[{"component_id": "replace-missing"}, {"component_id": "naive-bayes"}]"#;
    std::fs::write(d.join("p.json"), steps).unwrap();
    let out = avatar(d, &["eval", "--pool", "pool.json", "--pipeline", "p.json", "--data", "bundled:mixed-missing-class"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout_json(&out)["schema_version"], 1);

    std::fs::write(d.join("bad-pool.json"), r#"{"schema_version": 1, "components": []}"#).unwrap();
    let out = avatar(d, &["learn-kb", "--pool", "bad-pool.json", "--out", "kb.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = "seed = 9\n[optimize]\nbudget = \"300ms\"\nclock = \"thread-cpu\"\ninit = 5\n";
    std::fs::write(d.join("run.toml"), cfg).unwrap();
    let out = avatar(
        d,
        &["--config", "run.toml", "optimize", "--data", "bundled:regression", "--init", "1", "--out", "run.json"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let echo = effective_config(&out);
    assert_eq!(echo["seed"], 9);
    assert_eq!(echo["options"]["budget"], "300ms");
    assert_eq!(echo["options"]["init"], 1);
    let run: Value = serde_json::from_str(&std::fs::read_to_string(d.join("run.json")).unwrap()).unwrap();
    assert_eq!((run["seed"].as_u64(), run["init_count"].as_u64()), (Some(9), Some(1)));

    std::fs::write(d.join("typo.json"), r#"{"optimize": {"budegt": "1s"}}"#).unwrap();
    let out = avatar(d, &["--config", "typo.json", "optimize", "--data", "bundled:regression"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_rechecks_saved_files() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let bench = ["random-bench", "--data", "bundled:nominal-attrs", "--n", "30", "--out", "ag.json", "--csv", "ag.csv"];
    assert!(avatar(d, &bench).status.success());
    assert_eq!(std::fs::read_to_string(d.join("ag.csv")).unwrap().lines().count(), 31);

    let csv = avatar(d, &["report", "--in", "ag.json", "--format", "csv"]);
    assert!(csv.status.success());
    assert_eq!(String::from_utf8_lossy(&csv.stdout).lines().count(), 2);
    let json = avatar(d, &["report", "--in", "ag.json"]);
    assert_eq!(String::from_utf8_lossy(&json.stdout), std::fs::read_to_string(d.join("ag.json")).unwrap());

    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(d.join("ag.json")).unwrap()).unwrap();
    v["datasets"][0]["agree"] = 0.into();
    std::fs::write(d.join("broken.json"), v.to_string()).unwrap();
    assert_eq!(avatar(d, &["report", "--in", "broken.json"]).status.code(), Some(1));

    let run = ["optimize", "--data", "bundled:numeric-missing", "--budget", "200ms", "--out", "run.json"];
    assert!(avatar(d, &run).status.success());
    assert!(avatar(d, &["report", "--in", "run.json", "--format", "csv"]).status.success());
}

#[test]
fn same_flags_same_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let run = |out: &str| {
        let args = ["--seed", "5", "random-bench", "--data", "bundled:pathological", "--n", "25", "--out", out];
        assert!(avatar(d, &args).status.success());
        let mut v: Value = serde_json::from_str(&std::fs::read_to_string(d.join(out)).unwrap()).unwrap();
        for r in v["datasets"][0]["records"].as_array_mut().unwrap() {
            r["avatar_time"] = 0.into();
            r["t_method_time"] = 0.into();
        }
        v["datasets"][0]["avatar"] = Value::Null;
        v["datasets"][0]["t_method"] = Value::Null;
        v
    };
    assert_eq!(run("a.json"), run("b.json"));
    for out in ["x", "y"] {
        assert!(avatar(d, &["--seed", "5", "learn-kb", "--out", &format!("{out}.json")]).status.success());
    }
    assert_eq!(std::fs::read(d.join("x.json")).unwrap(), std::fs::read(d.join("y.json")).unwrap());
}
