//! Command-line interface checks driven against the built binary.

use std::io::Write as _;
use std::process::{Command, Output};

fn linksim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linksim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn classify_prints_layer_severity_and_bit() {
    let output = linksim(&["classify", "--kind", "MalformedTlp"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_of(&output);
    assert!(text.contains("kind=MalformedTlp"), "{text}");
    assert!(text.contains("layer=TL"), "{text}");
    assert!(text.contains("severity=FatalUncorrectable"), "{text}");
    assert!(text.contains("bit=14"), "{text}");
}

#[test]
fn classify_rejects_unknown_kind() {
    let output = linksim(&["classify", "--kind", "NoSuchKind"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn run_with_missing_config_is_a_usage_error() {
    let output = linksim(&["run", "--config", "/nonexistent/campaign.cfg"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn run_executes_a_config_and_writes_outputs() {
    let dir = tempfile::tempdir().expect("tempdir");
    let config_path = dir.path().join("campaign.cfg");
    let trace_path = dir.path().join("run.trace");
    let report_path = dir.path().join("run.report");
    let mut file = std::fs::File::create(&config_path).expect("config file");
    writeln!(file, "seed = 8").unwrap();
    writeln!(file, "mode = proposed").unwrap();
    writeln!(file, "horizon_cycles = 2000").unwrap();
    writeln!(file, "count_per_kind = 1").unwrap();
    writeln!(file, "trace_path = {}", trace_path.display()).unwrap();
    writeln!(file, "report_path = {}", report_path.display()).unwrap();
    drop(file);

    let output = linksim(&["run", "--config", config_path.to_str().unwrap()]);
    assert_eq!(
        output.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let text = stdout_of(&output);
    assert!(text.contains("passing=1"), "{text}");
    assert!(text.contains("faults_injected=15"), "{text}");

    let trace = std::fs::read_to_string(&trace_path).expect("trace file");
    assert!(trace.lines().next().unwrap_or_default().starts_with("cycle=0 "));
    let report = std::fs::read_to_string(&report_path).expect("report file");
    assert!(report.contains("passing=1"));

    let sliced = linksim(&[
        "trace",
        "--input",
        trace_path.to_str().unwrap(),
        "--from",
        "10",
        "--to",
        "20",
    ]);
    assert_eq!(sliced.status.code(), Some(0));
    let lines: Vec<String> = stdout_of(&sliced).lines().map(str::to_owned).collect();
    assert_eq!(lines.len(), 11);
    assert!(lines[0].starts_with("cycle=10 "));
    assert!(lines[10].starts_with("cycle=20 "));
}

#[test]
fn trace_rejects_reversed_bounds() {
    let output = linksim(&["trace", "--input", "/dev/null", "--from", "9", "--to", "3"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn inject_surfaces_the_expected_error() {
    let output = linksim(&["inject", "--kind", "DropAck", "--cycle", "200", "--seed", "5"]);
    assert_eq!(
        output.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let text = stdout_of(&output);
    assert!(text.contains("kind=ReplayTimeout"), "{text}");
    assert!(text.contains("fault=0"), "{text}");
}

#[test]
fn inject_rejects_unknown_fault_kind() {
    let output = linksim(&["inject", "--kind", "Gremlin", "--cycle", "1", "--seed", "1"]);
    assert_eq!(output.status.code(), Some(2));
}
