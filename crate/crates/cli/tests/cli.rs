use std::path::Path;
use std::process::{Command, Output};

use vms_ldr::scenario::haining::bundled_scenario_text;
use vms_ldr::scenario::PolicyRecord;
use vms_ldr::ScenarioBundle;

fn vms_ldr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vms-ldr")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = vms_ldr(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn code(args: &[&str]) -> i32 {
    vms_ldr(args).status.code().expect("exited")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

fn trace_of(report: &str) -> Vec<f64> {
    let line = report.lines().find(|l| l.starts_with("trace = ")).expect("trace line");
    line["trace = ".len()..]
        .trim_matches(|c| c == '[' || c == ']')
        .split(',')
        .map(|v| v.trim().parse().unwrap())
        .collect()
}

#[test]
fn synth_reproduces_the_bundled_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.toml");
    let b = dir.path().join("b.toml");
    ok(&["synth", "--days", "20", "--sigma", "0.3", "--seed", "7", "--out", s(&a)]);
    ok(&["synth", "--days", "20", "--sigma", "0.3", "--seed", "7", "--out", s(&b)]);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, bundled_scenario_text());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let bundle = ScenarioBundle::from_toml_str(&text).unwrap();
    assert_eq!((bundle.train_days.len(), bundle.test_days.len()), (10, 10));
}

#[test]
fn synth_rejects_zero_days() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["synth", "--days", "0", "--out", s(&dir.path().join("x.toml"))]), 2);
    assert_eq!(code(&["synth", "--days", "4", "--sigma", "-1", "--out", s(&dir.path().join("x.toml"))]), 2);
}

#[test]
fn training_a_baseline_is_a_precondition_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = vms_ldr(&["train", "--vms", "genuine", "--signal", "default", "--out", s(&dir.path().join("p"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nothing to train"));
}

#[test]
fn train_writes_policy_and_monotone_trace() {
    let dir = tempfile::tempdir().unwrap();
    let policy = dir.path().join("ldr.policy");
    let flags = ["--particles", "4", "--iterations", "4", "--replications", "1", "--seed", "3"];
    let mut args = vec!["train", "--vms", "ldr", "--signal", "default", "--out", s(&policy)];
    args.extend(flags);
    ok(&args);
    let record = PolicyRecord::load(&policy).unwrap();
    assert!(record.vms.is_some() && record.signal.is_none());
    let report = std::fs::read_to_string(dir.path().join("ldr.report.toml")).unwrap();
    let trace = trace_of(&report);
    assert_eq!(trace.len(), 4);
    assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    assert!(!report.contains("wall_clock"));

    // Same flags, same bytes.
    let again = dir.path().join("again.policy");
    let mut args = vec!["train", "--vms", "ldr", "--signal", "default", "--out", s(&again)];
    args.extend(flags);
    ok(&args);
    assert_eq!(std::fs::read(&policy).unwrap(), std::fs::read(&again).unwrap());
    assert_eq!(report, std::fs::read_to_string(dir.path().join("again.report.toml")).unwrap());
}

#[test]
fn joint_training_keeps_both_segments() {
    let dir = tempfile::tempdir().unwrap();
    let policy = dir.path().join("joint.policy");
    ok(&[
        "train",
        "--vms",
        "ldr",
        "--signal",
        "ldr",
        "--particles",
        "3",
        "--iterations",
        "2",
        "--replications",
        "1",
        "--out",
        s(&policy),
    ]);
    let record = PolicyRecord::load(&policy).unwrap();
    assert!(record.vms.is_some());
    assert_eq!(record.signal.unwrap().phase_counts(), vec![4, 4, 4, 4]);
}

#[test]
fn evaluate_writes_one_row_per_test_day_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    ok(&["evaluate", "--vms", "genuine", "--seed", "5", "--out", s(&a)]);
    ok(&["evaluate", "--vms", "genuine", "--seed", "5", "--out", s(&b)]);
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.as_bytes(), std::fs::read(&b).unwrap());
    let rows = csv_rows(&text);
    assert_eq!(rows[0], ["day", "strategy", "compliance", "mean_travel_time_s", "completed"]);
    assert_eq!(rows.len(), 12);
    assert_eq!(rows[1][0], "day-11");
    assert_eq!(rows[11][0], "mean");
    let phis: Vec<f64> = rows[1..11].iter().map(|r| r[3].parse().unwrap()).collect();
    let mean: f64 = rows[11][3].parse().unwrap();
    assert!((mean - phis.iter().sum::<f64>() / 10.0).abs() < 1e-9);
    assert!(rows[1..].iter().all(|r| r[1] == "genuine-default" && r[2] == "0.1-0.3-0.5-0.7-0.9"));

    let stdout = ok(&["evaluate", "--vms", "genuine", "--seed", "5"]).stdout;
    assert_eq!(stdout, text.as_bytes());
}

#[test]
fn evaluate_without_policy_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&["evaluate", "--vms", "ldr"]), 2);
    assert_eq!(code(&["evaluate", "--vms", "none", "--signal", "ldr"]), 2);
    let missing = dir.path().join("missing.policy");
    assert_eq!(code(&["evaluate", "--vms", "ldr", "--policy", s(&missing)]), 2);
    assert_eq!(code(&["evaluate", "--vms", "sometimes"]), 2);
    assert_eq!(code(&["evaluate", "--vms", "genuine", "--compliance", "0.9,0.1,0.5,0.5,0.5"]), 2);
}

#[test]
fn compare_rejects_an_empty_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["compare", "--policy-dir", s(dir.path()), "--compliance", "", "--out", s(dir.path())];
    assert_eq!(code(&args), 2);
}

#[test]
fn compare_without_trained_policies_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    assert_eq!(code(&["compare", "--policy-dir", s(dir.path()), "--out", s(&out)]), 2);
}

#[test]
fn compare_builds_matrix_and_message_log() {
    let dir = tempfile::tempdir().unwrap();
    let policies = dir.path().join("policies");
    let run = |out: &Path| {
        ok(&[
            "compare",
            "--policy-dir",
            s(&policies),
            "--train",
            "--particles",
            "3",
            "--iterations",
            "2",
            "--replications",
            "1",
            "--compliance",
            "0.3,0.4,0.5,0.6,0.7;0.1,0.3,0.5,0.7,0.9",
            "--out",
            s(out),
        ]);
    };
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    run(&first);
    run(&second);
    for f in ["matrix.csv", "days.csv", "message_volume.csv"] {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(second.join(f)).unwrap(), "{f}");
    }
    assert_eq!(std::fs::read_dir(&policies).unwrap().count(), 2 * 3 * 2);

    let matrix = csv_rows(&std::fs::read_to_string(first.join("matrix.csv")).unwrap());
    assert_eq!(matrix[0], ["strategy", "0.3-0.4-0.5-0.6-0.7", "0.1-0.3-0.5-0.7-0.9"]);
    let strategies: Vec<&str> = matrix[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(strategies, ["genuine-default", "genuine-ldr", "ldr-default", "ldr-ldr"]);
    assert!(matrix[1..].iter().flat_map(|r| &r[1..]).all(|v| v.parse::<f64>().unwrap() > 0.0));

    let log = csv_rows(&std::fs::read_to_string(first.join("message_volume.csv")).unwrap());
    assert_eq!(log.len() - 1, 4 * 2 * 10 * 60);
    assert!(log[1..].iter().any(|r| r[4] == "no_display" && r[7] != "0"));
    for r in &log[1..] {
        let diff: i64 = r[7].parse().unwrap();
        assert_eq!(diff, r[5].parse::<i64>().unwrap() - r[6].parse::<i64>().unwrap());
    }
}

#[test]
fn simulate_writes_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    ok(&["simulate", "--vms", "genuine", "--day", "day-12", "--seed", "1", "--out", s(&out)]);
    let rows = csv_rows(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 61);
    assert_eq!(rows[0].len(), 4 + 24 + 16);
    assert_eq!(rows[0][..4], ["step", "message", "route1_volume", "route2_volume"]);
    assert_eq!(rows[1][0], "1");
    assert_eq!(rows[1][rows[0].len() - 1], "0.25");
    assert_eq!(code(&["simulate", "--vms", "genuine", "--day", "day-99"]), 2);
}

#[test]
fn unreadable_scenario_fails() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "format_version = 1\nname = 3\n").unwrap();
    assert_eq!(code(&["evaluate", "--vms", "genuine", "--scenario", s(&bad)]), 1);
    let newer = dir.path().join("newer.toml");
    std::fs::write(&newer, bundled_scenario_text().replace("format_version = 1", "format_version = 9")).unwrap();
    let out = vms_ldr(&["evaluate", "--vms", "genuine", "--scenario", s(&newer)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("version"));
}
