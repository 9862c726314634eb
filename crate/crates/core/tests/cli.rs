use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use normal_tori::cli::{to_document, KIND_POSITION};
use normal_tori::fixtures;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_normal-tori"))
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(format!("{name}.json"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn shipped_data_matches_fixtures() {
    for (name, t) in fixtures::named() {
        let on_disk = std::fs::read_to_string(data(name)).unwrap();
        assert_eq!(on_disk, to_document(KIND_POSITION, &t), "{name}.json is stale");
    }
}

#[test]
fn normalize_t1_writes_count_two_and_one_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let o = run(&["normalize", p(&data("t1")), "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["format"], 1);
    assert_eq!(v["kind"], "normalization");
    assert_eq!(v["data"]["total"], 2);
    assert_eq!(v["data"]["trace"].as_array().unwrap().len(), 1);
    assert_eq!(
        v["data"]["intersection"],
        serde_json::json!({"s0": 1, "s1": 1, "s2": 0})
    );
    // trace log: one line per move
    let log = stdout(&o);
    assert_eq!(log.lines().count(), 1);
    assert!(log.starts_with("slide "), "{log}");
}

#[test]
fn trace_log_goes_to_its_own_file() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("trace.log");
    let o = run(&["normalize", p(&data("t1")), "--trace", p(&log)]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["data"]["total"], 2);
    assert!(std::fs::read_to_string(&log)
        .unwrap()
        .contains("s0:2 s1:1 s2:0 -> s0:1 s1:1 s2:0"));
}

#[test]
fn compare_flipped_t0_is_equivalent() {
    let o = run(&["compare", p(&data("t0")), p(&data("t0-flipped"))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "EQUIVALENT");
}

#[test]
fn compare_distinct_exits_three() {
    let o = run(&["compare", p(&data("t0")), p(&data("t2"))]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stdout(&o).trim(), "DISTINCT");
}

#[test]
fn compare_normalizes_its_inputs() {
    let o = run(&["compare", p(&data("t1")), p(&data("t0"))]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["compare", p(&data("parallel-disk")), p(&data("t0")), "--no-reversal"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn validate_klein_reports_monodromy() {
    let o = run(&["validate", p(&data("klein"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("monodromy nontrivial"), "{}", stderr(&o));
    assert!(stdout(&o).is_empty());
}

#[test]
fn validate_reports_normality() {
    let o = run(&["validate", p(&data("t0"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("\nnormal\n"), "{}", stdout(&o));
    let o = run(&["validate", p(&data("t1"))]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("not normal"));
}

#[test]
fn no_output_on_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    for cmd in ["normalize", "decorate", "export-dot"] {
        let o = run(&[cmd, p(&data("klein")), "-o", p(&out)]);
        assert_eq!(o.status.code(), Some(1), "{cmd}");
        assert!(!out.exists(), "{cmd} wrote output");
    }
}

#[test]
fn missing_file_exits_one() {
    let o = run(&["validate", "/definitely/not/here.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not/here.json"));
}

#[test]
fn malformed_input_names_the_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"format": 1, "kind": "torus-position", "data": {"graph": 3}}"#).unwrap();
    let o = run(&["validate", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("data.graph") && err.contains("line 1"), "{err}");

    std::fs::write(&bad, "not json").unwrap();
    assert_eq!(run(&["validate", p(&bad)]).status.code(), Some(1));

    std::fs::write(&bad, r#"{"format": 7, "kind": "torus-position", "data": {}}"#).unwrap();
    let o = run(&["validate", p(&bad)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unsupported format 7"));
}

#[test]
fn wrong_kind_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    assert_eq!(run(&["graph", "--rank", "3", "-o", p(&g)]).status.code(), Some(0));
    let o = run(&["normalize", p(&g)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sphere-graph"));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["fuzz", "--trials", "many"]).status.code(), Some(2));
    assert_eq!(run(&["compare", p(&data("t0"))]).status.code(), Some(2));
    assert_eq!(run(&["validate", p(&data("t0")), "--bogus"]).status.code(), Some(2));
}

#[test]
fn graph_round_trips_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    assert_eq!(
        run(&["graph", "--rank", "4", "--seed", "11", "-o", p(&g)])
            .status
            .code(),
        Some(0)
    );
    let o = run(&["validate", p(&g)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("rank 4, 6 pants, 9 spheres"), "{}", stdout(&o));
    let dot = stdout(&run(&["export-dot", p(&g)]));
    assert!(dot.starts_with("graph"), "{dot}");
}

#[test]
fn axis_words() {
    for name in ["t0", "t2", "t1"] {
        let o = run(&["axis-word", p(&data(name))]);
        assert_eq!(o.status.code(), Some(0));
        assert_eq!(stdout(&o).trim(), "x₁", "{name}");
    }
    assert_eq!(stdout(&run(&["axis-word", p(&data("t0")), "--ascii"])).trim(), "x1");
}

#[test]
fn decorate_then_compare() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d.json");
    let o = run(&["decorate", p(&data("t2")), "--base", "F2", "--side", "b", "-o", p(&d)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&d).unwrap()).unwrap();
    assert_eq!(v["kind"], "decoration");
    assert_eq!(v["data"]["bounds_solid_torus"], false);
    assert_eq!(run(&["compare", p(&d), p(&data("t2"))]).status.code(), Some(0));
    assert!(stdout(&run(&["export-dot", p(&d)])).contains("+"));
    let o = run(&["decorate", p(&data("t2")), "--base", "F9"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn outputs_are_deterministic() {
    let a = run(&["fuzz", "--trials", "12", "--seed", "5", "--rank", "3"]);
    let b = run(&["fuzz", "--trials", "12", "--seed", "5", "--rank", "3"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["kind"], "fuzz-report");
    assert_eq!(v["data"]["trials"], 12);
    assert!(stderr(&a).contains("failures 0"));
}

#[test]
fn confluence_on_a_file_and_fuzzed() {
    let o = run(&["confluence", p(&data("t1"))]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["data"]["confluent"], true);
    assert_eq!(v["data"]["outcomes"].as_array().unwrap().len(), 1);

    let o = run(&["confluence", p(&data("t1")), "--depth", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("exceeds the search bound"));

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let o = run(&["confluence", "--trials", "10", "--rank", "3", "-o", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("failures 0"));
}

#[test]
fn minimality_on_a_file_and_random() {
    let o = run(&["minimality", p(&data("t2")), "--trials", "20", "--depth", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["minimality", "--rank", "3", "--seed", "2", "--trials", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // the seed torus must be normal
    let o = run(&["minimality", p(&data("t1"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn normalization_output_feeds_other_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("n.json");
    assert_eq!(
        run(&["normalize", p(&data("t1")), "-o", p(&out)]).status.code(),
        Some(0)
    );
    assert_eq!(run(&["compare", p(&out), p(&data("t0"))]).status.code(), Some(0));
    assert_eq!(stdout(&run(&["axis-word", p(&out)])).trim(), "x₁");
    assert_eq!(run(&["validate", p(&out)]).status.code(), Some(0));
}

#[test]
fn bad_cap_probability_is_rejected() {
    let o = run(&["fuzz", "--cap-probability", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
}
