//! Frame-stage rules, applied to the merged tidy frame and its profile.

use crate::profile::ProfileReport;
use crate::tidy::TidyFrame;

use super::{
    finding, sort_findings, Rule, RuleFinding, RuleRegistry, R_CPI, R_CPU, R_GC_MEM, R_NOISE,
    R_RANGE,
};

/// Apply all enabled frame-stage rules. `report` must have been computed
/// from `frame`.
pub fn check_frame(
    frame: &TidyFrame,
    report: &ProfileReport,
    registry: &RuleRegistry,
) -> Vec<RuleFinding> {
    let mut findings = Vec::new();

    if let Some(rule) = registry.active(R_CPU) {
        check_cpu(rule, frame, &mut findings);
    }
    if let Some(rule) = registry.active(R_CPI) {
        check_cpi(rule, frame, report, &mut findings);
    }
    if let Some(rule) = registry.active(R_NOISE) {
        check_noise(rule, frame, report, &mut findings);
    }
    if let Some(rule) = registry.active(R_GC_MEM) {
        check_gc_mem(rule, frame, &mut findings);
    }
    if let Some(rule) = registry.active(R_RANGE) {
        check_range(rule, report, &mut findings);
    }

    sort_findings(&mut findings);
    findings
}

/// The metric part of a namespaced column name.
fn metric_segment(column: &str) -> &str {
    column.rsplit('.').next().unwrap_or(column)
}

/// CPU columns are identified by name pattern: the metric segment starts
/// with the configured prefix or ends with the configured suffix.
fn is_cpu_column(rule: &Rule, column: &str) -> bool {
    let metric = metric_segment(column);
    metric.starts_with(rule.text_param("prefix")) || metric.ends_with(rule.text_param("suffix"))
}

fn check_cpu(rule: &Rule, frame: &TidyFrame, findings: &mut Vec<RuleFinding>) {
    let min = rule.num_param("min");
    let max = rule.num_param("max");
    for (col, name) in frame.columns().iter().enumerate() {
        if !is_cpu_column(rule, name) {
            continue;
        }
        for row in frame.rows() {
            if let Some(value) = row.cells[col] {
                if value < min || value > max {
                    findings.push(finding(
                        rule,
                        name.clone(),
                        Some(row.ts),
                        None,
                        value,
                        format!(
                            "CPU percentage {value} outside [{min}, {max}] at {}",
                            row.ts
                        ),
                    ));
                }
            }
        }
    }
}

fn check_cpi(
    rule: &Rule,
    frame: &TidyFrame,
    report: &ProfileReport,
    findings: &mut Vec<RuleFinding>,
) {
    let threshold = rule.num_param("threshold");
    let pattern = rule.text_param("pattern").to_ascii_lowercase();
    for (col, name) in frame.columns().iter().enumerate() {
        if !name.to_ascii_lowercase().contains(&pattern) {
            continue;
        }
        let Some(minimum) = report.profiles.get(name).and_then(|p| p.min) else {
            continue;
        };
        if minimum < threshold {
            let ts = frame
                .rows()
                .iter()
                .find(|r| r.cells[col] == Some(minimum))
                .map(|r| r.ts);
            findings.push(finding(
                rule,
                name.clone(),
                ts,
                None,
                minimum,
                format!("CPI minimum {minimum} is below the physical floor {threshold}"),
            ));
        }
    }
}

fn check_noise(
    rule: &Rule,
    frame: &TidyFrame,
    report: &ProfileReport,
    findings: &mut Vec<RuleFinding>,
) {
    if frame.n_rows() == 0 {
        return;
    }
    for name in frame.columns() {
        let Some(profile) = report.profiles.get(name) else {
            continue;
        };
        if profile.missing_count >= frame.n_rows() {
            findings.push(finding(
                rule,
                name.clone(),
                None,
                None,
                profile.missing_count,
                format!(
                    "attribute is merely noise: missing in all {} rows",
                    frame.n_rows()
                ),
            ));
        }
    }
}

fn check_gc_mem(rule: &Rule, frame: &TidyFrame, findings: &mut Vec<RuleFinding>) {
    // Group the six per-JVM columns by their `gc.<id>.` prefix.
    let gc_prefixes: Vec<String> = frame
        .columns()
        .iter()
        .filter_map(|c| {
            c.strip_suffix(".heap_kb")
                .filter(|p| p.starts_with("gc."))
                .map(|p| p.to_string())
        })
        .collect();
    for prefix in gc_prefixes {
        let heap = frame.column_index(&format!("{prefix}.heap_kb"));
        let levels = [
            frame.column_index(&format!("{prefix}.mem_before_kb")),
            frame.column_index(&format!("{prefix}.mem_after_kb")),
        ];
        let Some(heap) = heap else { continue };
        for level in levels.into_iter().flatten() {
            let column = &frame.columns()[level];
            for row in frame.rows() {
                if let (Some(mem), Some(cap)) = (row.cells[level], row.cells[heap]) {
                    if mem > cap {
                        findings.push(finding(
                            rule,
                            column.clone(),
                            Some(row.ts),
                            None,
                            mem,
                            format!(
                                "memory level {mem} KB exceeds heap size {cap} KB at {}",
                                row.ts
                            ),
                        ));
                    }
                }
            }
        }
    }
}

fn check_range(rule: &Rule, report: &ProfileReport, findings: &mut Vec<RuleFinding>) {
    for (name, profile) in &report.profiles {
        if let (Some(min), Some(max)) = (profile.min, profile.max) {
            if min > max {
                findings.push(finding(
                    rule,
                    name.clone(),
                    None,
                    None,
                    format!("min={min} max={max}"),
                    "profile minimum exceeds maximum; statistics are internally inconsistent",
                ));
            }
        }
    }
}
