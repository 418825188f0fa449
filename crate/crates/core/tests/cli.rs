//! End-to-end checks of the command-line front end, driving the compiled
//! binary against the committed fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_mallnet")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn tempdir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("mallnet-cli-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("tempdir");
    dir
}

#[test]
fn bipolarize_prints_the_program_with_aliases() {
    let out = run(&["bipolarize", fixture("example.mall").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("# alias n1 = (a^ + b^) * c^"));
    assert!(text.contains("n0 := n0^ * ((a & b) | n1 | n2 | (d & e))"));
    assert!(text.contains("n1 := n1^ * ((a^ + b^) * c^)"));
    assert!(text.contains("n2 := n2^ * (c * (d^ + e^))"));
    assert_eq!(text.lines().filter(|l| l.contains(":=")).count(), 3);
}

#[test]
fn bipolarize_json_lines() {
    let out = run(&[
        "bipolarize",
        fixture("example.mall").to_str().unwrap(),
        "--format",
        "json-lines",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().all(|l| l.starts_with("{\"head\":")));
}

#[test]
fn stdout_is_deterministic() {
    for args in [
        vec!["bipolarize", fixture("example.mall").to_str().unwrap()],
        vec!["check-net", fixture("fig5.net").to_str().unwrap()],
        vec![
            "simulate",
            fixture("example.bpl").to_str().unwrap(),
            "n0",
            "--seed",
            "3",
            "--policy",
            "random",
        ],
    ] {
        let a = run(&args);
        let b = run(&args);
        assert_eq!(a.stdout, b.stdout, "stdout differs for {args:?}");
        assert_eq!(a.status.code(), b.status.code());
    }
}

#[test]
fn check_proof_accepts_the_example_proof() {
    let out = run(&[
        "check-proof",
        fixture("example.bsp").to_str().unwrap(),
        fixture("example.bpl").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("ok: proof of [n0] with 9 inferences"));
}

#[test]
fn check_proof_rejects_a_tampered_proof() {
    let dir = tempdir("tamper");
    let tampered = std::fs::read_to_string(fixture("example.bsp"))
        .unwrap()
        .replacen("n1#1", "n1#2", 1);
    let path = dir.join("bad.bsp");
    std::fs::write(&path, tampered).unwrap();
    let out = run(&[
        "check-proof",
        path.to_str().unwrap(),
        fixture("example.bpl").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn deseq_seq_pipeline_roundtrips() {
    let dir = tempdir("pipeline");
    let deseq = run(&[
        "deseq",
        fixture("example.bsp").to_str().unwrap(),
        fixture("example.bpl").to_str().unwrap(),
    ]);
    assert_eq!(deseq.status.code(), Some(0));
    let net_path = dir.join("example.net");
    std::fs::write(&net_path, &deseq.stdout).unwrap();

    let check = run(&["check-net", net_path.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(0));
    assert_eq!(stdout(&check).trim(), "correct");

    let seq = run(&[
        "seq",
        net_path.to_str().unwrap(),
        fixture("example.bpl").to_str().unwrap(),
    ]);
    assert_eq!(seq.status.code(), Some(0));
    let expected = std::fs::read_to_string(fixture("example.bsp")).unwrap();
    assert_eq!(stdout(&seq), expected);
}

#[test]
fn check_net_rejects_the_bridge_structure_with_a_loop() {
    let out = run(&["check-net", fixture("fig5.net").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let text = stdout(&out);
    assert!(text.contains("incorrect"));
    assert!(text.contains("loop:"), "offending loop is printed: {text}");
}

#[test]
fn check_net_accepts_goal_only_structure() {
    let out = run(&["check-net", fixture("empty.net").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).trim(), "correct");
}

#[test]
fn check_net_explain_prints_forests() {
    let dir = tempdir("explain");
    let deseq = run(&[
        "deseq",
        fixture("example.bsp").to_str().unwrap(),
        fixture("example.bpl").to_str().unwrap(),
    ]);
    let net_path = dir.join("example.net");
    std::fs::write(&net_path, &deseq.stdout).unwrap();
    let out = run(&["check-net", net_path.to_str().unwrap(), "--explain"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("slice ["));
}

#[test]
fn simulate_builds_and_emits_a_correct_net() {
    let dir = tempdir("simulate");
    let net_path = dir.join("final.net");
    let out = run(&[
        "simulate",
        fixture("example.bpl").to_str().unwrap(),
        "n0",
        "--seed",
        "0",
        "--max-steps",
        "200",
        "--emit-net",
        net_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "construction closes");
    let text = stdout(&out);
    assert!(text.contains("action=commit"));
    assert!(text.lines().all(|l| l.starts_with("step=")));

    let check = run(&["check-net", net_path.to_str().unwrap()]);
    assert_eq!(check.status.code(), Some(0));
}

#[test]
fn simulate_reports_unfinished_runs() {
    // the bridge program can never close its goals
    let out = run(&[
        "simulate",
        fixture("bridge.bpl").to_str().unwrap(),
        "q0,q1",
        "--max-steps",
        "60",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("action=abort"));
}

#[test]
fn simulate_json_lines() {
    let out = run(&[
        "simulate",
        fixture("example.bpl").to_str().unwrap(),
        "n0",
        "--format",
        "json-lines",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out)
        .lines()
        .all(|l| l.starts_with('{') && l.ends_with('}')));
}

#[test]
fn export_dot_renders_shapes_and_jumps() {
    let dir = tempdir("dot");
    let deseq = run(&[
        "deseq",
        fixture("example.bsp").to_str().unwrap(),
        fixture("example.bpl").to_str().unwrap(),
    ]);
    let net_path = dir.join("example.net");
    std::fs::write(&net_path, &deseq.stdout).unwrap();
    let out = run(&["export-dot", net_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("digraph"));
    assert!(text.contains("shape=triangle"));
    assert!(text.contains("shape=circle"));
    assert!(text.contains("style=dashed"));
}

#[test]
fn usage_errors_exit_two() {
    let out = run(&["bipolarize", "/nonexistent/file.mall"]);
    assert_eq!(out.status.code(), Some(2));
    let dir = tempdir("badparse");
    let path = dir.join("bad.mall");
    std::fs::write(&path, "a **").unwrap();
    let out = run(&["bipolarize", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}
