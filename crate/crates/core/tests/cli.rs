use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn streamcvi(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_streamcvi"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn generate_s3_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        let o = streamcvi(&["generate", "s3", "--seed", "7", "--out", name], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read_to_string(dir.path().join("a.csv")).unwrap();
    assert_eq!(a.lines().count(), 2001);
    assert_eq!(a, fs::read_to_string(dir.path().join("b.csv")).unwrap());
    let events = fs::read_to_string(dir.path().join("a.events.jsonl")).unwrap();
    assert_eq!(events.lines().count(), 9);
}

#[test]
fn generate_s1_default_seed_matches_table_length() {
    let dir = tempfile::tempdir().unwrap();
    let o = streamcvi(&["generate", "s1", "--out", "s1.csv"], dir.path());
    assert!(o.status.success());
    let text = fs::read_to_string(dir.path().join("s1.csv")).unwrap();
    assert_eq!(text.lines().count(), 1956);
}

#[test]
fn generate_rejects_unknown_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let o = streamcvi(&["generate", "s9", "--out", "x.csv"], dir.path());
    assert!(!o.status.success());
}

const SCENARIOS: &str = r#"
[[scenario]]
name = "gen"
dataset = "s2"
seed = 1
[scenario.run]
algorithm = { kind = "sk_means", k = 3 }
indices = ["xb", "db"]

[[scenario]]
name = "file"
input = "stream.csv"
change_events = "stream.events.jsonl"
schema = { has_header = true, label = "label" }
[scenario.run]
algorithm = { kind = "oec" }
indices = ["xb_lambda"]

[[scenario]]
name = "missing"
input = "nowhere.csv"
"#;

#[test]
fn run_scenarios_from_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sc.toml"), SCENARIOS).unwrap();
    let o = streamcvi(&["generate", "s2", "--seed", "3", "--out", "stream.csv"], dir.path());
    assert!(o.status.success());

    let o = streamcvi(&["run", "gen", "file", "--scenario-file", "sc.toml", "--out", "res"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.contains("gen: final k = 3, undefined steps = 0, trace length = 2497"), "{text}");
    assert!(text.contains("file: final k ="), "{text}");
    let trace = fs::read_to_string(dir.path().join("res/gen.trace.csv")).unwrap();
    assert!(trace.starts_with("n,k,xb,xb_lambda,db,db_lambda\n4,3,"));
    let events = fs::read_to_string(dir.path().join("res/file.events.jsonl")).unwrap();
    assert_eq!(events.matches("ground_truth_change").count(), 10);
    assert!(events.contains("cluster_created"));

    let o = streamcvi(&["run", "gen", "--scenario-file", "sc.toml", "--k", "5", "--indices", "xb", "--out", "res"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("final k = 5"));
}

#[test]
fn run_errors_name_scenario_and_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("sc.toml"), SCENARIOS).unwrap();
    let o = streamcvi(&["run", "missing", "--scenario-file", "sc.toml"], dir.path());
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("missing") && err.contains("nowhere.csv"), "{err}");

    let o = streamcvi(&["run", "file", "--scenario-file", "sc.toml", "--k", "2"], dir.path());
    assert!(!o.status.success());
    let o = streamcvi(&["run", "nope", "--scenario-file", "sc.toml"], dir.path());
    assert!(!o.status.success());
}

#[test]
fn verify_passes_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = streamcvi(&["verify", "--trials", "40"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("PASS"));
    for name in ["xb", "xb_lambda", "db", "db_lambda"] {
        assert!(text.contains(&format!("  {name:<10} max relative error")), "{text}");
    }
}

#[test]
fn verify_fails_with_impossible_tolerance() {
    let dir = tempfile::tempdir().unwrap();
    let o = streamcvi(&["verify", "--trials", "3", "--tolerance=-1", "--sequential"], dir.path());
    assert!(!o.status.success());
    assert!(stdout(&o).contains("FAIL seed"));
}
