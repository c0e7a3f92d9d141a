use std::io::Write;
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn ultraspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ultraspec")).args(args).output().expect("binary runs")
}

fn with_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_ultraspec"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("binary runs");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn json_out(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is one JSON document")
}

#[test]
fn member_right_shift_outside_small_pseudospectrum() {
    let out = ultraspec(&["member", r#"{"p":5,"op":{"kind":"right_shift"},"lambda":"1","epsilon":"1/5","side":"left","kind":"pseudospectrum"}"#]);
    assert_eq!(json_out(&out), serde_json::json!({"member": false}));
}

#[test]
fn invert_diagonal_matrix() {
    let out = ultraspec(&["invert", r#"{"p":5,"op":{"kind":"matrix","entries":[["1","0"],["0","5"]]},"side":"left"}"#]);
    let v = json_out(&out);
    assert_eq!(v["invertible"], true);
    assert_eq!(v["min_inverse_norm"], serde_json::json!({"pow": 1}));
    assert_eq!(v["certificate"]["type"], "exact_inverse");
}

#[test]
fn invert_reports_left_shift_kernel() {
    let out = ultraspec(&["invert", r#"{"p":5,"op":{"kind":"shifted","inner":{"kind":"left_shift"},"lambda":"5"},"side":"left"}"#]);
    let v = json_out(&out);
    assert_eq!(v["invertible"], false);
    assert_eq!(v["certificate"]["type"], "kernel_vector");
}

#[test]
fn empty_law_list_is_silent_success() {
    for input in ["[]", r#"{"instances":[]}"#] {
        let out = ultraspec(&["laws", input]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn laws_stream_one_verdict_per_line() {
    let input = r#"{"laws":["L10","L18"],"instances":[{"p":3,"op":{"kind":"matrix","entries":[["1","3"],["0","2"]]},"lambda":"1","epsilon":"1/3","samples":20}]}"#;
    let out = ultraspec(&["laws", "--seed", "9", input]);
    assert_eq!(out.status.code(), Some(0));
    let lines: Vec<Value> = String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0]["law_id"], "L10");
    assert!(lines.iter().all(|v| v["pass"] == true && v["instance"]["seed"] == 9));
}

#[test]
fn unknown_law_is_a_schema_error() {
    let out = ultraspec(&["laws", r#"{"laws":["L99"],"instances":[]}"#]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn norm_of_operator_and_vector() {
    let v = json_out(&ultraspec(&["norm", r#"{"p":5,"op":{"kind":"affine","inner":{"kind":"right_shift"},"beta":"5","alpha":"7"}}"#]));
    assert_eq!(v["norm"], serde_json::json!({"pow": 0}));
    let v = json_out(&ultraspec(&["norm", r#"{"p":2,"vector":{"ambient":{"kn":3},"entries":{"0":"3","2":"1/8"}}}"#]));
    assert_eq!(v["norm"], serde_json::json!({"pow": 3}));
}

#[test]
fn reads_stdin_and_files() {
    let doc = r#"{"p":5,"op":{"kind":"left_shift"},"lambda":"5","kind":"spectrum"}"#;
    assert_eq!(json_out(&with_stdin(&["member", "-"], doc))["member"], true);
    let path = std::env::temp_dir().join(format!("ultraspec-cli-{}.json", std::process::id()));
    std::fs::write(&path, doc).unwrap();
    let out = ultraspec(&["member", path.to_str().unwrap()]);
    std::fs::remove_file(&path).unwrap();
    assert_eq!(json_out(&out)["member"], true);
}

#[test]
fn schema_violations_exit_two() {
    for args in [
        vec!["member", r#"{"p":4,"op":{"kind":"right_shift"},"lambda":"1","kind":"spectrum"}"#],
        vec!["member", r#"{"p":5,"op":{"kind":"right_shift"},"lambda":"1/0","kind":"spectrum"}"#],
        vec!["member", r#"{"p":5,"op":{"kind":"right_shift"},"lambda":"1","kind":"pseudospectrum"}"#],
        vec!["member", r#"{"p":5,"op":{"kind":"spiral"},"lambda":"1","kind":"spectrum"}"#],
        vec!["invert", r#"{"p":5,"op":{"kind":"right_shift"},"extra":1}"#],
        vec!["invert", "{not json"],
        vec!["invert", "/nonexistent/input.json"],
        vec!["scan", "--grid-valuations", "3..-3", r#"{"p":5,"op":{"kind":"right_shift"},"epsilon":"1"}"#],
    ] {
        let out = ultraspec(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn contract_errors_exit_three() {
    let out = ultraspec(&["witness", r#"{"p":5,"op":{"kind":"right_shift"},"lambda":"1","epsilon":"1/5"}"#]);
    assert_eq!(out.status.code(), Some(3));
    let out = ultraspec(&["destabilize", r#"{"p":5,"op":{"kind":"right_shift"},"lambda":"25","epsilon":"1","side":"right"}"#]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn witness_and_destabilizer_documents() {
    let doc = r#"{"p":5,"op":{"kind":"matrix","entries":[["1","0"],["0","5"]]},"lambda":"25","epsilon":"1","samples":40}"#;
    let w = json_out(&ultraspec(&["witness", doc]));
    assert_eq!(w["witness"]["ambient"], serde_json::json!({"kn": 2}));
    let d = json_out(&ultraspec(&["destabilize", "--seed", "4", doc]));
    assert_eq!(d["norm_bound_checked"], true);
    assert_eq!(d["sampling"]["seed"], 4);
    assert!(d["sampling"]["singular"].as_u64().unwrap() > 0);
}

#[test]
fn scan_csv_rows_match_grid() {
    let doc = r#"{"p":3,"op":{"kind":"diagonal","prefix":["1"],"tail":"3"},"epsilon":"1"}"#;
    let out = ultraspec(&["scan", "--format", "csv", "--grid-units", "1,2", "--grid-valuations", "-2..2", doc]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 1 + 2 * 5);
    let json = json_out(&ultraspec(&["scan", doc]));
    assert_eq!(json["rows"].as_array().unwrap().len(), 1 + 3 * 7);
    let svg = ultraspec(&["scan", "--format", "svg", doc]);
    assert!(String::from_utf8(svg.stdout).unwrap().starts_with("<svg"));
}

#[test]
fn output_is_deterministic() {
    let doc = r#"[{"p":2,"op":{"kind":"matrix","entries":[["1","2"],["1/2","3"]]},"lambda":"1","epsilon":"2","seed":5,"samples":30}]"#;
    let a = ultraspec(&["laws", doc]);
    let b = ultraspec(&["laws", doc]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), Some(0));
}
