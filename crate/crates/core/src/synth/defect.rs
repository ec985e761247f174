//! Defect-injection catalog: eight known corruptions, each mapping to
//! exactly one expected detection outcome.
//!
//! An injection mutates the typed model and the emitted files coherently,
//! then rebuilds the ground truth, so the expected merged frame always
//! matches what a correct pipeline produces from the mutated bytes and the
//! expected-outcome list names precisely what the quality layers must
//! report. All picks are seeded and deterministic.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::ingest::IssueReason;
use crate::rules;

use super::{build_ground_truth, gc_file_name, render_files, ExpectedOutcome, SynthOutput};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DefectKind {
    /// Duplicate one client (timestamp, counter) line verbatim.
    DupTsMachine,
    /// Rewrite one SAR CPU-percentage cell to a value in (100, 120].
    CpuOver100,
    /// Rewrite one SAR CPI cell to a value below the 0.25 floor.
    CpiUnder,
    /// Shift every client timestamp by a fixed offset.
    TzShift,
    /// Truncate one GC log line mid-structure.
    CorruptLine,
    /// Blank one SAR metric in every row, leaving the column declared but
    /// valueless.
    AllMissingColumn,
    /// Swap two adjacent GC log lines so timestamps run backwards once.
    NonMonotonic,
    /// Delete one interior SAR row, doubling one sampling gap.
    CadenceGap,
}

impl DefectKind {
    pub const ALL: [DefectKind; 8] = [
        DefectKind::DupTsMachine,
        DefectKind::CpuOver100,
        DefectKind::CpiUnder,
        DefectKind::TzShift,
        DefectKind::CorruptLine,
        DefectKind::AllMissingColumn,
        DefectKind::NonMonotonic,
        DefectKind::CadenceGap,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            DefectKind::DupTsMachine => "dup-ts-machine",
            DefectKind::CpuOver100 => "cpu-over-100",
            DefectKind::CpiUnder => "cpi-under",
            DefectKind::TzShift => "tz-shift",
            DefectKind::CorruptLine => "corrupt-line",
            DefectKind::AllMissingColumn => "all-missing-column",
            DefectKind::NonMonotonic => "non-monotonic",
            DefectKind::CadenceGap => "cadence-gap",
        }
    }
}

impl FromStr for DefectKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DefectKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| format!("unknown defect id {s:?}"))
    }
}

/// One cataloged defect plus its numeric parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefectSpec {
    pub kind: DefectKind,
    pub params: BTreeMap<String, f64>,
}

impl DefectSpec {
    pub fn new(kind: DefectKind) -> Self {
        let mut params = BTreeMap::new();
        if kind == DefectKind::TzShift {
            params.insert("offset_s".to_string(), 3600.0);
        }
        Self { kind, params }
    }

    fn offset_s(&self) -> i64 {
        self.params.get("offset_s").copied().unwrap_or(3600.0) as i64
    }
}

impl FromStr for DefectSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(DefectSpec::new(DefectKind::from_str(s)?))
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InjectError {
    #[error("defect {kind:?} not applicable: {reason}")]
    NotApplicable { kind: &'static str, reason: String },
}

fn not_applicable(kind: DefectKind, reason: impl Into<String>) -> InjectError {
    InjectError::NotApplicable {
        kind: kind.id(),
        reason: reason.into(),
    }
}

/// Apply one localized defect to generated output, returning the mutated
/// files plus updated ground truth.
pub fn inject(
    spec: &DefectSpec,
    output: &SynthOutput,
    seed: u64,
) -> Result<SynthOutput, InjectError> {
    let mut result = output.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut expected = result.ground_truth.expected.clone();
    let config = result.config.clone();

    match spec.kind {
        DefectKind::DupTsMachine => {
            if result.model.client.is_empty() {
                return Err(not_applicable(spec.kind, "no client records"));
            }
            let idx = rng.gen_range(0..result.model.client.len());
            let record = result.model.client[idx].clone();
            expected.push(ExpectedOutcome::Finding {
                rule_id: rules::R_DUP.to_string(),
                scope: format!("client.{}", record.counter),
                ts_epoch_ms: Some(record.ts_ms.0),
                index: None,
            });
            result.model.client.insert(idx + 1, record);
            result.files = render_files(&config, &result.model);
        }

        DefectKind::CpuOver100 => {
            let metric = config
                .sar_metrics
                .iter()
                .position(|m| m.starts_with('%') || m.ends_with("_pct"))
                .ok_or_else(|| not_applicable(spec.kind, "no CPU-percentage metric in the menu"))?;
            let host = rng.gen_range(0..result.model.sar.len());
            let (host_name, samples) = &mut result.model.sar[host];
            if samples.is_empty() {
                return Err(not_applicable(spec.kind, "no SAR rows"));
            }
            let row = rng.gen_range(0..samples.len());
            let bad = 100.0 + rng.gen_range(0.01..=20.0);
            samples[row].metrics[metric].1 = Some(bad);
            expected.push(ExpectedOutcome::Finding {
                rule_id: rules::R_CPU.to_string(),
                scope: format!("sar.{host_name}.{}", config.sar_metrics[metric]),
                ts_epoch_ms: Some(samples[row].ts_ms.0),
                index: None,
            });
            result.files = render_files(&config, &result.model);
        }

        DefectKind::CpiUnder => {
            let metric = config
                .sar_metrics
                .iter()
                .position(|m| m.to_ascii_lowercase().contains("cpi"))
                .ok_or_else(|| not_applicable(spec.kind, "no CPI metric in the menu"))?;
            let host = rng.gen_range(0..result.model.sar.len());
            let (host_name, samples) = &mut result.model.sar[host];
            if samples.is_empty() {
                return Err(not_applicable(spec.kind, "no SAR rows"));
            }
            let row = rng.gen_range(0..samples.len());
            let bad = rng.gen_range(0.05..0.25);
            samples[row].metrics[metric].1 = Some(bad);
            expected.push(ExpectedOutcome::Finding {
                rule_id: rules::R_CPI.to_string(),
                scope: format!("sar.{host_name}.{}", config.sar_metrics[metric]),
                ts_epoch_ms: Some(samples[row].ts_ms.0),
                index: None,
            });
            result.files = render_files(&config, &result.model);
        }

        DefectKind::TzShift => {
            let offset_ms = spec.offset_s() * 1000;
            if offset_ms == 0 {
                return Err(not_applicable(spec.kind, "offset_s must be non-zero"));
            }
            if result.model.client.is_empty() {
                return Err(not_applicable(spec.kind, "no client records"));
            }
            let clean_rows: std::collections::BTreeSet<i64> = result
                .ground_truth
                .frame
                .timestamps()
                .map(|t| t.0)
                .collect();
            for record in &mut result.model.client {
                record.ts_ms.0 += offset_ms;
            }
            result.files = render_files(&config, &result.model);
            // Count the exact row-set divergence against the clean frame.
            let shifted_truth = build_ground_truth(&result.model, Vec::new());
            let new_rows: std::collections::BTreeSet<i64> =
                shifted_truth.frame.timestamps().map(|t| t.0).collect();
            let sym_diff = clean_rows.symmetric_difference(&new_rows).count();
            expected.push(ExpectedOutcome::CleanFrameDivergence {
                min_row_diffs: sym_diff,
            });
        }

        DefectKind::CorruptLine => {
            let candidates: Vec<usize> = result
                .model
                .gc
                .iter()
                .enumerate()
                .filter(|(_, (_, e))| !e.is_empty())
                .map(|(i, _)| i)
                .collect();
            if candidates.is_empty() {
                return Err(not_applicable(spec.kind, "no GC events"));
            }
            let jvm_idx = candidates[rng.gen_range(0..candidates.len())];
            let (jvm, events) = &mut result.model.gc[jvm_idx];
            let line_idx = rng.gen_range(0..events.len());
            let line = super::render_gc_line(&events[line_idx]);
            let corrupted = line[..line.len() / 2].to_string();
            expected.push(ExpectedOutcome::ParseIssue {
                source_id: jvm.clone(),
                reason: IssueReason::Malformed,
                line_no: line_idx + 1,
            });
            let file_name = gc_file_name(jvm);
            events.remove(line_idx);
            // Render from the reduced model, then splice the broken line
            // back at its original position.
            result.files = render_files(&config, &result.model);
            let text = result.files.get_mut(&file_name).expect("gc file exists");
            let mut lines: Vec<&str> = text.lines().collect();
            lines.insert(line_idx, &corrupted);
            *text = format!("{}\n", lines.join("\n"));
        }

        DefectKind::AllMissingColumn => {
            let metric = config
                .sar_metrics
                .iter()
                .rposition(|m| {
                    !m.to_ascii_lowercase().contains("cpi")
                        && !m.starts_with('%')
                        && !m.ends_with("_pct")
                })
                .ok_or_else(|| {
                    not_applicable(spec.kind, "no neutral SAR metric available to blank")
                })?;
            for (host_name, samples) in &mut result.model.sar {
                for sample in samples.iter_mut() {
                    sample.metrics[metric].1 = None;
                }
                expected.push(ExpectedOutcome::Finding {
                    rule_id: rules::R_NOISE.to_string(),
                    scope: format!("sar.{host_name}.{}", config.sar_metrics[metric]),
                    ts_epoch_ms: None,
                    index: None,
                });
            }
            result.files = render_files(&config, &result.model);
        }

        DefectKind::NonMonotonic => {
            let candidates: Vec<usize> = result
                .model
                .gc
                .iter()
                .enumerate()
                .filter(|(_, (_, e))| e.len() >= 2)
                .map(|(i, _)| i)
                .collect();
            if candidates.is_empty() {
                return Err(not_applicable(
                    spec.kind,
                    "need a JVM with at least 2 events",
                ));
            }
            let jvm_idx = candidates[rng.gen_range(0..candidates.len())];
            let (jvm, events) = &mut result.model.gc[jvm_idx];
            let k = rng.gen_range(1..events.len());
            let earlier_ts = events[k - 1].wall_clock_ms.0;
            events.swap(k - 1, k);
            expected.push(ExpectedOutcome::Finding {
                rule_id: rules::R_MONO.to_string(),
                scope: format!("gc.{jvm}"),
                ts_epoch_ms: Some(earlier_ts),
                index: Some(k + 1),
            });
            result.files = render_files(&config, &result.model);
        }

        DefectKind::CadenceGap => {
            let host = rng.gen_range(0..result.model.sar.len());
            let (host_name, samples) = &mut result.model.sar[host];
            if samples.len() < 3 {
                return Err(not_applicable(spec.kind, "need at least 3 SAR rows"));
            }
            let row = rng.gen_range(1..samples.len() - 1);
            let later_ts = samples[row + 1].ts_ms.0;
            samples.remove(row);
            expected.push(ExpectedOutcome::Finding {
                rule_id: rules::R_CADENCE.to_string(),
                scope: format!("sar.{host_name}"),
                ts_epoch_ms: Some(later_ts),
                index: Some(row),
            });
            result.files = render_files(&config, &result.model);
        }
    }

    result.ground_truth = build_ground_truth(&result.model, expected);
    result.defects.push(spec.clone());
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::super::{generate, SynthConfig};
    use super::*;

    fn clean() -> SynthOutput {
        generate(&SynthConfig::default(), 11).unwrap()
    }

    #[test]
    fn every_defect_maps_to_one_expected_outcome() {
        let base = clean();
        for kind in DefectKind::ALL {
            let spec = DefectSpec::new(kind);
            let injected = inject(&spec, &base, 99).unwrap();
            assert_eq!(injected.ground_truth.expected.len(), 1, "{kind:?}");
            assert_eq!(injected.defects, vec![spec]);
        }
    }

    #[test]
    fn injections_are_deterministic() {
        let base = clean();
        let spec = DefectSpec::new(DefectKind::CpuOver100);
        let a = inject(&spec, &base, 5).unwrap();
        let b = inject(&spec, &base, 5).unwrap();
        assert_eq!(a.files, b.files);
        assert_eq!(a.ground_truth.expected, b.ground_truth.expected);
    }

    #[test]
    fn dup_injection_duplicates_one_line_verbatim() {
        let base = clean();
        let injected = inject(&DefectSpec::new(DefectKind::DupTsMachine), &base, 3).unwrap();
        let old_lines = base.files["client.csv"].lines().count();
        let new_lines = injected.files["client.csv"].lines().count();
        assert_eq!(new_lines, old_lines + 1);
        // The duplicate collapses last-wins to the same value, so the
        // expected frame is unchanged.
        assert_eq!(
            injected.ground_truth.frame.rows(),
            base.ground_truth.frame.rows()
        );
    }

    #[test]
    fn cpu_injection_pushes_one_cell_over_100() {
        let base = clean();
        let injected = inject(&DefectSpec::new(DefectKind::CpuOver100), &base, 3).unwrap();
        let frame = &injected.ground_truth.frame;
        let col = frame.column_index("sar.web01.%user").unwrap();
        let over: Vec<f64> = frame
            .rows()
            .iter()
            .filter_map(|r| r.cells[col])
            .filter(|v| *v > 100.0)
            .collect();
        assert_eq!(over.len(), 1);
        assert!(over[0] > 100.0 && over[0] <= 120.0);
    }

    #[test]
    fn corrupt_line_keeps_line_count_and_drops_event() {
        let base = clean();
        let injected = inject(&DefectSpec::new(DefectKind::CorruptLine), &base, 8).unwrap();
        let Some(ExpectedOutcome::ParseIssue {
            source_id, line_no, ..
        }) = injected.ground_truth.expected.first().cloned()
        else {
            panic!("expected a parse issue");
        };
        let file = format!("gc_{source_id}.log");
        assert_eq!(
            injected.files[&file].lines().count(),
            base.files[&file].lines().count()
        );
        let line = injected.files[&file].lines().nth(line_no - 1).unwrap();
        assert!(!line.ends_with("secs]"));
        // One event row less (or equal if the timestamp was shared).
        assert!(injected.ground_truth.frame.n_rows() < base.ground_truth.frame.n_rows() + 1);
    }

    #[test]
    fn all_missing_column_blanks_every_row() {
        let base = clean();
        let injected = inject(&DefectSpec::new(DefectKind::AllMissingColumn), &base, 4).unwrap();
        let frame = &injected.ground_truth.frame;
        let col = frame.column_index("sar.web01.rxpck_per_s").unwrap();
        assert!(frame.rows().iter().all(|r| r.cells[col].is_none()));
        // SAR file rows end with a trailing empty field.
        assert!(injected.files["sar_web01.dat"]
            .lines()
            .skip(1)
            .all(|l| l.ends_with(';')));
    }

    #[test]
    fn tz_shift_moves_every_client_row() {
        let base = clean();
        let injected = inject(&DefectSpec::new(DefectKind::TzShift), &base, 4).unwrap();
        let Some(ExpectedOutcome::CleanFrameDivergence { min_row_diffs }) =
            injected.ground_truth.expected.first().cloned()
        else {
            panic!("expected divergence outcome");
        };
        let client_ticks = 300 / 5 + 1;
        assert!(min_row_diffs >= client_ticks);
    }

    #[test]
    fn multi_host_injections_target_and_report_per_host() {
        let config = super::super::SynthConfig {
            sar_hosts: vec!["web01".to_string(), "db01".to_string()],
            ..super::super::SynthConfig::default()
        };
        let base = super::super::generate(&config, 21).unwrap();

        // Blanking a metric leaves one noise column (and finding) per host.
        let injected = inject(&DefectSpec::new(DefectKind::AllMissingColumn), &base, 2).unwrap();
        assert_eq!(injected.ground_truth.expected.len(), 2);
        for host in ["web01", "db01"] {
            let column = format!("sar.{host}.rxpck_per_s");
            let frame = &injected.ground_truth.frame;
            let col = frame.column_index(&column).unwrap();
            assert!(frame.rows().iter().all(|r| r.cells[col].is_none()));
            assert!(injected.ground_truth.expected.iter().any(|e| matches!(
                e,
                ExpectedOutcome::Finding { rule_id, scope, .. }
                    if rule_id == "R-NOISE" && *scope == column
            )));
        }

        // The gap defect hits exactly one seeded host.
        let injected = inject(&DefectSpec::new(DefectKind::CadenceGap), &base, 2).unwrap();
        assert_eq!(injected.ground_truth.expected.len(), 1);
        let total_rows: usize = injected.model.sar.iter().map(|(_, s)| s.len()).sum();
        let base_rows: usize = base.model.sar.iter().map(|(_, s)| s.len()).sum();
        assert_eq!(total_rows, base_rows - 1);
    }

    #[test]
    fn defect_ids_round_trip() {
        for kind in DefectKind::ALL {
            assert_eq!(DefectKind::from_str(kind.id()).unwrap(), kind);
        }
        assert!(DefectKind::from_str("bogus").is_err());
    }
}
