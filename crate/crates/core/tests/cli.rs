mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use wardlog::chase::{relaxed_warded_chase, ChaseConfig};
use wardlog::egd::EgdConfig;
use wardlog::reason::chase_h;
use wardlog::syntax::{parse_file, print_program, Program};

fn programs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("programs")
}

fn fixture(name: &str) -> String {
    programs().join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wardlog")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn schema(name: &str) -> jsonschema::JSONSchema {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("schemas").join(format!("{name}.schema.json"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&v).expect("schema compiles")
}

fn assert_valid(name: &str, out: &Output) -> Value {
    let v: Value = serde_json::from_str(&stdout(out)).expect("stdout is JSON");
    let s = schema(name);
    if let Err(errors) = s.validate(&v) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{name} output does not match its schema: {msgs:?}\n{v:#}");
    }
    v
}

fn write_program(dir: &Path, text: &str) -> String {
    let path = dir.join("p.dlge");
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn analyze_intro_is_certified() {
    let o = run(&["analyze", &fixture("intro.dlge")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("safe taintedness: safe"));
    let j = run(&["analyze", &fixture("intro.dlge"), "--format", "json"]);
    let v = assert_valid("analysis", &j);
    assert_eq!(v["safe"], true);
    assert_eq!(v["warded"], true);
}

#[test]
fn analyze_clustering_names_the_sibling_rule() {
    let o = run(&["analyze", &fixture("clustering.dlge")]);
    assert_eq!(code(&o), 1);
    let text = stdout(&o);
    assert!(text.contains("tgd3: tainted variable Z occurs 2 times"), "{text}");
    let j = run(&["analyze", &fixture("clustering.dlge"), "--format", "json"]);
    let v = assert_valid("analysis", &j);
    assert_eq!(v["witnesses"][0]["rule"], "tgd3");
    assert_eq!(v["witnesses"][0]["variable"], "Z");
}

#[test]
fn analysis_json_validates_for_every_fixture() {
    for entry in std::fs::read_dir(programs()).unwrap() {
        let path = entry.unwrap().path().display().to_string();
        let o = run(&["analyze", &path, "--format", "json"]);
        assert!(code(&o) <= 1, "{path}");
        assert_valid("analysis", &o);
    }
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.dlge").display().to_string();
    assert_eq!(code(&run(&["analyze", &missing])), 2);

    let bad = write_program(dir.path(), "p(a) -> .");
    let o = run(&["analyze", &bad]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("1:"), "{}", stderr(&o));

    let arity = write_program(dir.path(), "p(a). p(a, b).");
    assert_eq!(code(&run(&["query", &arity])), 2);

    assert_eq!(code(&run(&["chase", &fixture("intro.dlge"), "--limit", "0"])), 2);
    assert_eq!(code(&run(&["chase", &fixture("intro.dlge"), "--variant", "oblivious"])), 2);
    assert_eq!(code(&run(&["analyze", &fixture("intro.dlge"), "--format", "dot"])), 2);
    let no_dir = dir.path().join("none").display().to_string();
    assert_eq!(code(&run(&["query", &fixture("intro.dlge"), "--facts", &no_dir])), 2);
}

fn dot_counts(dot: &str) -> (usize, usize) {
    let nodes = dot.lines().filter(|l| l.trim_start().starts_with('n') && l.contains("[label=")).count();
    let edges = dot.lines().filter(|l| l.contains(" -> ")).count();
    (nodes, edges)
}

#[test]
fn chase_dot_matches_the_chase_graph() {
    let p = parse_file(&programs().join("clusters.dlge")).unwrap();
    let cfg = ChaseConfig::default();

    let tgd = relaxed_warded_chase(&p.facts, &p, &cfg);
    let o = run(&["chase", &fixture("clusters.dlge"), "--variant", "relaxed", "--tgd-only", "--format", "dot", "--clusters"]);
    assert_eq!(code(&o), 0);
    let dot = stdout(&o);
    assert_eq!(dot_counts(&dot), (tgd.graph.nodes().len(), tgd.graph.edges().len()));
    // Three database roots: the p facts.
    assert_eq!(dot.matches("subgraph cluster_").count(), tgd.graph.roots());

    let full = chase_h(&p.facts, &p, &cfg, &EgdConfig::default());
    let o = run(&["chase", &fixture("clusters.dlge"), "--variant", "relaxed", "--format", "dot"]);
    assert_eq!(code(&o), 0);
    assert_eq!(dot_counts(&stdout(&o)), (full.graph.nodes().len(), full.graph.edges().len()));
}

#[test]
fn chase_step_limit_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let sigma1 = write_program(dir.path(), "component(engine).\ncomponent(X) -> component(Z), partOf(X, Z).\n");
    let o = run(&["chase", &sigma1, "--variant", "standard", "--limit", "50"]);
    assert_eq!(code(&o), 4);
    assert!(stdout(&o).contains("step_limit_exceeded: "));
    let j = run(&["chase", &sigma1, "--variant", "standard", "--limit", "50", "--format", "json"]);
    let v = assert_valid("chase", &j);
    assert_eq!(v["stats"]["tgd_steps"], 50);
}

#[test]
fn chase_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let transcript = dir.path().join("steps.jsonl");
    for variant in ["standard", "warded", "relaxed"] {
        let o = run(&[
            "chase",
            &fixture("key_violation.dlge"),
            "--variant",
            variant,
            "--format",
            "json",
            "--transcript",
            &transcript.display().to_string(),
        ]);
        assert_eq!(code(&o), 3, "{variant}");
        let v = assert_valid("chase", &o);
        assert_eq!(v["status"], "failed");
        let mut pair = [v["failure"]["left"].as_str().unwrap(), v["failure"]["right"].as_str().unwrap()];
        pair.sort();
        assert_eq!(pair, ["b", "c"]);
        let lines = std::fs::read_to_string(&transcript).unwrap();
        assert!(lines.lines().count() >= 1);
        for l in lines.lines() {
            serde_json::from_str::<Value>(l).unwrap();
        }
    }
}

#[test]
fn chase_text_lists_facts() {
    let o = run(&["chase", &fixture("shared_attribute.dlge")]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("att(1,a)."));
    assert_eq!(text.lines().filter(|l| l.starts_with("comp(")).count(), 3);
    let j = run(&["chase", &fixture("shared_attribute.dlge"), "--variant", "warded", "--format", "json"]);
    assert_valid("chase", &j);
}

#[test]
fn query_intro_is_true() {
    let o = run(&["query", &fixture("intro.dlge")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "true");
}

#[test]
fn query_shared_attribute_needs_egds() {
    let o = run(&["query", &fixture("shared_attribute.dlge")]);
    assert_eq!(stdout(&o).trim(), "true");
    let o = run(&["query", &fixture("shared_attribute.dlge"), "--tgd-only"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "false");
}

#[test]
fn query_with_no_matches_prints_csv_header() {
    let dir = tempfile::tempdir().unwrap();
    let p = write_program(dir.path(), "e(a, b).\n?(X) e(X, c).\n");
    let o = run(&["query", &p, "--format", "csv"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "X\n");
}

#[test]
fn query_json_validates() {
    for name in ["intro.dlge", "clusters.dlge", "key_violation.dlge", "data_fusion.dlge"] {
        let o = run(&["query", &fixture(name), "--format", "json"]);
        assert!(matches!(code(&o), 0 | 1), "{name}");
        assert_valid("query", &o);
    }
    let o = run(&["query", &fixture("clusters.dlge"), "--format", "json"]);
    let v = assert_valid("query", &o);
    assert_eq!(v["results"][0]["tuples"].as_array().unwrap().len(), 9);
}

#[test]
fn uncertified_query_is_refused_unless_forced() {
    let o = run(&["query", &fixture("data_fusion.dlge")]);
    assert_eq!(code(&o), 1);
    assert!(stdout(&o).is_empty());
    assert!(stderr(&o).contains("refusing"));
    for flag in ["--force-unsafe", "--standard-fallback"] {
        let o = run(&["query", &fixture("data_fusion.dlge"), flag]);
        assert_eq!(code(&o), 0, "{flag}");
        assert_eq!(stdout(&o).trim(), "true");
        assert!(stderr(&o).contains("warning"));
    }
}

#[test]
fn query_step_limit_exits_4() {
    let o = run(&["query", &fixture("intro.dlge"), "--limit", "1"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn unsatisfiable_query_is_entailed() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(programs().join("key_violation.dlge")).unwrap() + "? missing(x).\n";
    let p = write_program(dir.path(), &text);
    let o = run(&["query", &p]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "true");
    assert!(stderr(&o).contains("unsatisfiable"));
}

#[test]
fn csv_facts_merge_with_inline_facts() {
    let dir = tempfile::tempdir().unwrap();
    let facts = dir.path().join("facts");
    std::fs::create_dir(&facts).unwrap();
    std::fs::write(facts.join("att.csv"), "1,a\n2,a\n3,a\n").unwrap();
    std::fs::write(facts.join("element.csv"), "2\n3\n").unwrap();
    let text = std::fs::read_to_string(programs().join("keyed_components.dlge")).unwrap()
        + "element(1).\n? comp(1, Z), comp(2, Z), comp(3, Z).\n";
    let p = write_program(dir.path(), &text);
    let facts = facts.display().to_string();
    let o = run(&["query", &p, "--facts", &facts]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), "true");
    // Without the CSV facts only element(1) is known.
    assert_eq!(stdout(&run(&["query", &p])).trim(), "false");
}

#[test]
fn check_routes() {
    for method in ["encoding", "direct", "both"] {
        let o = run(&["check", &fixture("key_violation.dlge"), "--method", method]);
        assert_eq!(code(&o), 3, "{method}");
        assert!(stdout(&o).starts_with("unsatisfiable"));
        let o = run(&["check", &fixture("intro.dlge"), "--method", method]);
        assert_eq!(code(&o), 0, "{method}");
        assert_eq!(stdout(&o).trim(), "satisfiable");
    }
    let o = run(&["check", &fixture("key_violation.dlge"), "--format", "json"]);
    let v = assert_valid("check", &o);
    assert_eq!(v["satisfiable"], false);
    assert_eq!(v["encoding"], false);
    assert_eq!(v["direct"], false);
}

#[test]
fn check_refuses_uncertified_and_respects_limit() {
    assert_eq!(code(&run(&["check", &fixture("clustering.dlge")])), 1);
    assert_eq!(code(&run(&["check", &fixture("clustering.dlge"), "--force-unsafe"])), 0);
    assert_eq!(code(&run(&["check", &fixture("intro.dlge"), "--limit", "1"])), 4);
}

#[test]
fn check_both_agrees_on_generated_programs() {
    let dir = tempfile::tempdir().unwrap();
    for case in common::corpus(25, 31) {
        let p = Program { facts: case.db.clone(), ..case.program.clone() };
        let path = write_program(dir.path(), &print_program(&p));
        let o = run(&["check", &path, "--method", "both", "--limit", &common::ORACLE_LIMIT.to_string()]);
        let expected = if case.full.is_failed() { 3 } else { 0 };
        assert_eq!(code(&o), expected, "seed {}: {}", case.seed, stderr(&o));
    }
}
