use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use madpg::graph::build_graph;
use madpg::monitor::read_trace;
use madpg::replay::{record, replay, schedule_path_for, MatchSchedule, RunDescriptor};

fn madd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_madd")).args(args).output().unwrap()
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout_json(out: &Output) -> Value {
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_trace_and_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let out = madd(&["run", "two_senders", "--np", "3", "--seed", "4", "--out", s(&path)]);
    let v = stdout_json(&out);
    assert_eq!(v["origin"], "seed:4");
    let expected = record(&RunDescriptor::new("two_senders", 3), 4).unwrap();
    let trace = read_trace(&path).unwrap();
    assert_eq!(trace.events, expected.trace.events);
    let schedule = MatchSchedule::read(schedule_path_for(&path)).unwrap();
    assert_eq!(schedule, expected.schedule);
    assert_eq!(replay(&schedule).unwrap().outputs, expected.outputs);
    assert_eq!(v["outputs"][0]["text"], String::from_utf8(expected.outputs[0].clone()).unwrap());
}

#[test]
fn skew_and_overhead_reach_the_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let out = madd(&[
        "run", "pipeline_chain", "--np", "3", "--overhead", "2", "--skew", "1=-40", "--out", s(&path),
    ]);
    stdout_json(&out);
    let meta = read_trace(&path).unwrap().meta;
    assert_eq!(meta.overhead_model.per_event_overhead, 2);
    assert_eq!(meta.overhead_model.offset(madpg::ids::ProcessId(1)), -40);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(madd(&[]).status.code(), Some(1));
    assert_eq!(madd(&["run", "two_senders"]).status.code(), Some(1));
    assert_eq!(madd(&["frobnicate"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let out = madd(&["run", "no_such_program", "--np", "2", "--out", s(&dir.path().join("x.jsonl"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_program"));
    assert_eq!(madd(&["--help"]).status.code(), Some(0));
}

#[test]
fn deadlock_exits_two_with_a_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dead.jsonl");
    let out = madd(&["run", "token_ring", "--np", "3", "--input", "broken=1", "--out", s(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("ranks 0, 1, 2"), "{stderr}");
    assert!(read_trace(&path).is_ok());
    assert!(!schedule_path_for(&path).exists());
}

#[test]
fn malformed_trace_exits_three() {
    let path = fixture("malformed.jsonl");
    for cmd in ["analyze", "races", "breakpoint"] {
        let mut args = vec![cmd, path.as_str()];
        if cmd != "analyze" {
            args.extend(["--event", "0:0"]);
        }
        assert_eq!(madd(&args).status.code(), Some(3), "{cmd}");
    }
}

#[test]
fn analyze_reports_the_planted_mismatch() {
    let path = fixture("length_mismatch.jsonl");
    let v = stdout_json(&madd(&["analyze", &path, "--format", "json"]));
    let findings = v["findings"].as_array().unwrap();
    assert_eq!(findings.len(), 1);
    assert_eq!(findings[0]["kind"], "LENGTH_MISMATCH");
    assert_eq!(findings[0]["events"], serde_json::json!(["0:0", "1:0"]));
    let table = madd(&["analyze", &path]);
    assert_eq!(table.status.code(), Some(0));
    let text = String::from_utf8(table.stdout).unwrap();
    assert!(text.contains("LENGTH_MISMATCH"));
    assert!(text.contains("sender length 8 but receiver length 4"));
}

#[test]
fn json_output_is_canonical_and_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    stdout_json(&madd(&["run", "distance_doubling", "--np", "4", "--out", s(&path)]));
    let a = madd(&["analyze", s(&path), "--format", "json"]);
    let b = madd(&["analyze", s(&path), "--format", "json"]);
    assert_eq!(a.stdout, b.stdout);
    let v: Value = serde_json::from_slice(&a.stdout).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
}

#[test]
fn races_use_the_sibling_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    stdout_json(&madd(&["run", "two_senders", "--np", "3", "--out", s(&path)]));
    let v = stdout_json(&madd(&["races", s(&path), "--event", "0:0"]));
    assert_eq!(v["method"], "EXACT_REPLAY");
    assert_eq!(v["candidates"], serde_json::json!([{"sender": 1, "seq": 0}, {"sender": 2, "seq": 0}]));
    let hb = stdout_json(&madd(&["races", s(&path), "--event", "0:0", "--mode", "hb"]));
    assert_eq!(hb["method"], "HB_FILTER");
    let explicit = madd(&["races", &fixture("clean.jsonl"), "--event", "1:0"]);
    assert_eq!(explicit.status.code(), Some(1));
}

#[test]
fn breakpoint_and_halt() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    stdout_json(&madd(&["run", "pipeline_chain", "--np", "3", "--out", s(&path)]));
    let v = stdout_json(&madd(&["breakpoint", s(&path), "--event", "1:1", "--halt"]));
    assert_eq!(v["cut"]["stop_after"], serde_json::json!({"0": 0, "1": 1, "2": -1}));
    assert_eq!(v["halted"]["next_event_no"], serde_json::json!([1, 2, 0]));
}

#[test]
fn replay_force_swaps_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let run = stdout_json(&madd(&["run", "two_senders", "--np", "3", "--seed", "1", "--out", s(&path)]));
    let first = run["outputs"][0]["text"].as_str().unwrap().to_string();
    let schedule = schedule_path_for(&path);
    let plain = stdout_json(&madd(&["replay", s(&schedule)]));
    assert_eq!(plain["outputs"][0]["text"], first.as_str());

    let observed = &first[..1];
    let other = if observed == "1" { "2" } else { "1" };
    let forced_path = dir.path().join("forced.jsonl");
    let forced = stdout_json(&madd(&[
        "replay", s(&schedule), "--force", &format!("0:0={other}:0"), "--out", s(&forced_path),
    ]));
    assert_eq!(forced["outputs"][0]["text"], format!("{other}{observed}"));
    let g = build_graph(&read_trace(&forced_path).unwrap()).unwrap();
    assert_eq!(g.event("0:0".parse().unwrap()).unwrap().msg.unwrap().sender.0.to_string(), other);

    let bad = madd(&["replay", s(&schedule), "--force", &format!("0:1={observed}:0")]);
    assert_eq!(bad.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("candidates"));
}

#[test]
fn explore_counts_executions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    stdout_json(&madd(&["run", "two_senders", "--np", "3", "--out", s(&path)]));
    let out = madd(&["explore", s(&path)]);
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.contains("\"executions\": 2"));
    assert!(text.contains("\"truncated\": false"));
    let v = stdout_json(&out);
    assert_eq!(v["distinct_outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn programs_are_listed() {
    let v = stdout_json(&madd(&["programs"]));
    let names: Vec<&str> = v.as_array().unwrap().iter().map(|p| p["name"].as_str().unwrap()).collect();
    for want in ["two_senders", "poisson", "distance_doubling", "token_ring", "array_demo"] {
        assert!(names.contains(&want), "{want}");
    }
}

/// Byte-exact against a reviewed golden file: the mixed fixture plants one
/// finding of each kind, and its three wildcard receives have 2, 1 and 1
/// unconsumed channel heads respectively.
#[test]
fn analyze_json_matches_golden_file() {
    let out = madd(&["analyze", &fixture("mixed.jsonl"), "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let golden = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/mixed_analyze.json")).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), golden);
}

#[test]
fn analyze_examples_per_program() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.jsonl");
    stdout_json(&madd(&["run", "poisson", "--np", "2", "--input", "n=8", "--input", "iters=5", "--out", s(&path)]));
    let v = stdout_json(&madd(&["analyze", s(&path), "--format", "json"]));
    assert_eq!(v["findings"], serde_json::json!([]));
    assert_eq!(v["array_collections"], serde_json::json!(["poisson_grid"]));

    let path = dir.path().join("t.jsonl");
    stdout_json(&madd(&["run", "two_senders", "--np", "3", "--out", s(&path)]));
    let v = stdout_json(&madd(&["analyze", s(&path), "--format", "json"]));
    let wild = v["wildcard_receives"].as_array().unwrap();
    assert_eq!(wild.len(), 2);
    assert_eq!(wild[0]["candidate_count"], 2);
    assert_eq!(wild[0]["method"], "EXACT_REPLAY");
}
