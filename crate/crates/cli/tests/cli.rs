//! Black-box tests over the compiled binary: exit-code contract, synth
//! determinism, pipeline detection, and report reproducibility.

use std::path::Path;
use std::process::{Command, Output};

fn tidytel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tidytel"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1437473700")
        .output()
        .expect("binary runs")
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(current) = stack.pop() {
        for entry in std::fs::read_dir(&current).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                entries.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    entries.sort();
    entries
}

#[test]
fn synth_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let result = tidytel(&["synth", "--out", out.to_str().unwrap(), "--seed", "42"]);
        assert_eq!(exit_code(&result), 0, "{result:?}");
    }
    assert_eq!(read_dir_bytes(&a), read_dir_bytes(&b));
}

#[test]
fn clean_pipeline_exits_zero_with_empty_findings() {
    let dir = tempfile::tempdir().unwrap();
    let synth_dir = dir.path().join("data");
    let report = dir.path().join("envelope.json");
    assert_eq!(
        exit_code(&tidytel(&[
            "synth",
            "--out",
            synth_dir.to_str().unwrap(),
            "--seed",
            "7"
        ])),
        0
    );
    let result = tidytel(&[
        "pipeline",
        "--in",
        synth_dir.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 0, "{}", stdout_of(&result));

    let envelope: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(envelope.get("findings").is_none());
    assert_eq!(envelope["merge_stats"]["cols"], 26);
    assert!(envelope["input_digests"].as_object().unwrap().len() == 5);
}

#[test]
fn injected_cpu_defect_exits_one_and_reports_r_cpu() {
    let dir = tempfile::tempdir().unwrap();
    let synth_dir = dir.path().join("data");
    let report = dir.path().join("envelope.json");
    assert_eq!(
        exit_code(&tidytel(&[
            "synth",
            "--out",
            synth_dir.to_str().unwrap(),
            "--seed",
            "7",
            "--defects",
            "cpu-over-100",
        ])),
        0
    );
    let result = tidytel(&[
        "pipeline",
        "--in",
        synth_dir.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 1, "{}", stdout_of(&result));

    let envelope: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let findings = envelope["findings"].as_array().unwrap();
    assert!(findings.iter().any(|f| f["rule_id"] == "R-CPU"));

    // Warnings downgrade under --lenient.
    let lenient = tidytel(&["pipeline", "--in", synth_dir.to_str().unwrap(), "--lenient"]);
    assert_eq!(exit_code(&lenient), 0, "{}", stdout_of(&lenient));
}

#[test]
fn corrupt_line_surfaces_as_parse_issue_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let synth_dir = dir.path().join("data");
    tidytel(&[
        "synth",
        "--out",
        synth_dir.to_str().unwrap(),
        "--seed",
        "2",
        "--defects",
        "corrupt-line",
    ]);
    let report = dir.path().join("envelope.json");
    let result = tidytel(&[
        "pipeline",
        "--in",
        synth_dir.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 1, "{}", stdout_of(&result));
    let envelope: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let issues = envelope["parse_issues"].as_array().unwrap();
    assert_eq!(issues.len(), 1);
    assert_eq!(issues[0]["reason"], "Malformed");
    // Both pipelines tolerate the bad line, so frames still agree.
    assert!(envelope.get("findings").is_none());
}

#[test]
fn missing_input_is_fatal_exit_two() {
    let result = tidytel(&["merge", "--in", "/nonexistent/missing.csv"]);
    assert_eq!(exit_code(&result), 2);
    let result = tidytel(&["pipeline", "--in", "/nonexistent"]);
    assert_eq!(exit_code(&result), 2);
    let result = tidytel(&["definitely-not-a-subcommand"]);
    assert_eq!(exit_code(&result), 2);
}

#[test]
fn pipeline_merged_output_matches_ground_truth_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let synth_dir = dir.path().join("data");
    let merged = dir.path().join("merged.csv");
    tidytel(&["synth", "--out", synth_dir.to_str().unwrap(), "--seed", "3"]);
    let result = tidytel(&[
        "pipeline",
        "--in",
        synth_dir.to_str().unwrap(),
        "--out",
        merged.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 0);
    let ours = std::fs::read(&merged).unwrap();
    let truth = std::fs::read(synth_dir.join("ground_truth/merged.csv")).unwrap();
    assert_eq!(ours, truth);
}

#[test]
fn identical_runs_emit_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let synth_dir = dir.path().join("data");
    tidytel(&["synth", "--out", synth_dir.to_str().unwrap(), "--seed", "5"]);
    let r1 = dir.path().join("r1.json");
    let r2 = dir.path().join("r2.json");
    for report in [&r1, &r2] {
        let result = tidytel(&[
            "pipeline",
            "--in",
            synth_dir.to_str().unwrap(),
            "--report",
            report.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&result), 0);
    }
    assert_eq!(std::fs::read(&r1).unwrap(), std::fs::read(&r2).unwrap());
}

#[test]
fn pipeline_equals_composed_individual_stages() {
    let dir = tempfile::tempdir().unwrap();
    let synth_dir = dir.path().join("data");
    tidytel(&["synth", "--out", synth_dir.to_str().unwrap(), "--seed", "8"]);

    // Stage by stage: parse each source to its own frame, then merge them.
    let mut frame_paths = Vec::new();
    for (file, source) in [
        ("gc_jvm1.log", "gc"),
        ("gc_jvm2.log", "gc"),
        ("gc_jvm3.log", "gc"),
        ("sar_web01.dat", "sar"),
        ("client.csv", "client"),
    ] {
        let out = dir.path().join(format!("{file}.frame.csv"));
        let result = tidytel(&[
            "parse",
            "--source",
            source,
            "--in",
            synth_dir.join(file).to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&result), 0);
        frame_paths.push(out);
    }
    let composed = dir.path().join("composed.csv");
    let mut merge_args = vec!["merge", "--in"];
    let path_strs: Vec<&str> = frame_paths.iter().map(|p| p.to_str().unwrap()).collect();
    merge_args.extend(path_strs);
    merge_args.extend(["--out", composed.to_str().unwrap()]);
    assert_eq!(exit_code(&tidytel(&merge_args)), 0);

    // One-shot pipeline over the same directory.
    let merged = dir.path().join("pipeline.csv");
    let result = tidytel(&[
        "pipeline",
        "--in",
        synth_dir.to_str().unwrap(),
        "--out",
        merged.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 0);

    assert_eq!(
        std::fs::read(&composed).unwrap(),
        std::fs::read(&merged).unwrap()
    );
}

#[test]
fn verify_against_round_trip_external_is_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let synth_dir = dir.path().join("data");
    tidytel(&["synth", "--out", synth_dir.to_str().unwrap(), "--seed", "9"]);
    let gc = synth_dir.join("gc_jvm1.log");
    let frame = dir.path().join("frame.csv");

    // Export pipeline A's frame, then feed it back as the external dataset.
    let result = tidytel(&[
        "parse",
        "--source",
        "gc",
        "--in",
        gc.to_str().unwrap(),
        "--out",
        frame.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 0);
    let result = tidytel(&[
        "verify",
        "--source",
        "gc",
        "--in",
        gc.to_str().unwrap(),
        "--external",
        frame.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 0, "{}", stdout_of(&result));
    assert!(stdout_of(&result).contains("Consistent"));
}

#[test]
fn verify_flags_external_with_wrong_time_unit() {
    let dir = tempfile::tempdir().unwrap();
    let synth_dir = dir.path().join("data");
    tidytel(&["synth", "--out", synth_dir.to_str().unwrap(), "--seed", "9"]);
    let gc = synth_dir.join("gc_jvm1.log");
    let frame = dir.path().join("frame.csv");
    tidytel(&[
        "parse",
        "--source",
        "gc",
        "--in",
        gc.to_str().unwrap(),
        "--out",
        frame.to_str().unwrap(),
    ]);

    // Corrupt the external copy: timestamps in epoch seconds by mistake.
    let text = std::fs::read_to_string(&frame).unwrap();
    let broken: String = text
        .lines()
        .map(|line| {
            if let Some((ts, rest)) = line.split_once(',') {
                if let Ok(ms) = ts.parse::<i64>() {
                    return format!("{},{rest}\n", ms / 1000);
                }
            }
            format!("{line}\n")
        })
        .collect();
    std::fs::write(&frame, broken).unwrap();

    let result = tidytel(&[
        "verify",
        "--source",
        "gc",
        "--in",
        gc.to_str().unwrap(),
        "--external",
        frame.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 1, "{}", stdout_of(&result));
}

#[test]
fn check_honors_rule_config_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let synth_dir = dir.path().join("data");
    tidytel(&[
        "synth",
        "--out",
        synth_dir.to_str().unwrap(),
        "--seed",
        "4",
        "--defects",
        "cpi-under",
    ]);

    let result = tidytel(&["check", "--in", synth_dir.to_str().unwrap()]);
    assert_eq!(exit_code(&result), 1);
    assert!(stdout_of(&result).contains("R-CPI"));

    // Disabling the rule silences the run.
    let rules = dir.path().join("rules.conf");
    std::fs::write(&rules, "R-CPI.enabled = false\n").unwrap();
    let result = tidytel(&[
        "check",
        "--in",
        synth_dir.to_str().unwrap(),
        "--rules",
        rules.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 0, "{}", stdout_of(&result));

    // Unknown rule ids in the config are fatal.
    std::fs::write(&rules, "R-BOGUS.threshold = 1\n").unwrap();
    let result = tidytel(&[
        "check",
        "--in",
        synth_dir.to_str().unwrap(),
        "--rules",
        rules.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 2);
}

#[test]
fn tz_shift_defect_breaks_external_ground_truth_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let clean_dir = dir.path().join("clean");
    let shifted_dir = dir.path().join("shifted");
    tidytel(&["synth", "--out", clean_dir.to_str().unwrap(), "--seed", "6"]);
    tidytel(&[
        "synth",
        "--out",
        shifted_dir.to_str().unwrap(),
        "--seed",
        "6",
        "--defects",
        "tz-shift",
    ]);

    // The clean ground-truth frame acts as the external reference; the
    // shifted pipeline must disagree with it on every client row.
    let external = clean_dir.join("ground_truth/merged.csv");
    let result = tidytel(&[
        "pipeline",
        "--in",
        shifted_dir.to_str().unwrap(),
        "--external",
        external.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&result), 1, "{}", stdout_of(&result));
    assert!(stdout_of(&result).contains("Inconsistent"));
}
