//! Pivots: reshape parsed records into per-source tidy frames.
//!
//! Column namespaces keep merges collision-free: `gc.<jvm>.<field>`,
//! `sar.<host>.<metric>`, `client.<counter>`. Column order is deterministic
//! (per-source first-appearance, fixed field order within a GC source) so
//! independently written pipelines can be compared name-for-name and
//! order-for-order. Duplicate (timestamp, column) cells resolve last-wins
//! and surface as warnings.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::ingest::{ClientRecord, GcEvent, SarSample};
use crate::timebase::EpochMillis;

use super::{FrameRow, TidyFrame};

/// Fields emitted for each GC source, in column order.
pub const GC_FIELDS: [&str; 6] = [
    "mem_before_kb",
    "mem_after_kb",
    "heap_kb",
    "pause_s",
    "kind",
    "elapsed_s",
];

/// A duplicate-collapse notice from a pivot: the later record won.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotWarning {
    pub ts: EpochMillis,
    /// The duplicated identity: a GC source, a SAR host, or a client counter.
    pub key: String,
    pub message: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PivotError {
    #[error("hostname {hostname:?} declares conflicting metric sets")]
    ConflictingMetricSet { hostname: String },
}

fn ordered_keys<'a, I: Iterator<Item = &'a str>>(iter: I) -> Vec<String> {
    let mut keys: Vec<String> = Vec::new();
    for key in iter {
        if !keys.iter().any(|k| k == key) {
            keys.push(key.to_string());
        }
    }
    keys
}

/// Pivot GC events into one frame with six columns per source JVM.
pub fn pivot_gc(events: &[GcEvent]) -> (TidyFrame, Vec<PivotWarning>) {
    let sources = ordered_keys(events.iter().map(|e| e.source_id.as_str()));
    let mut columns = Vec::with_capacity(sources.len() * GC_FIELDS.len());
    for source in &sources {
        for field in GC_FIELDS {
            columns.push(format!("gc.{source}.{field}"));
        }
    }

    let mut warnings = Vec::new();
    let mut cells: BTreeMap<EpochMillis, Vec<Option<f64>>> = BTreeMap::new();
    for event in events {
        let base = sources
            .iter()
            .position(|s| s == &event.source_id)
            .expect("source collected above")
            * GC_FIELDS.len();
        let row = cells
            .entry(event.wall_clock_ms)
            .or_insert_with(|| vec![None; columns.len()]);
        if row[base].is_some() {
            warnings.push(PivotWarning {
                ts: event.wall_clock_ms,
                key: format!("gc.{}", event.source_id),
                message: format!(
                    "duplicate GC event for {} at {}; keeping the last",
                    event.source_id, event.wall_clock_ms
                ),
            });
        }
        let values = [
            event.mem_before_kb as f64,
            event.mem_after_kb as f64,
            event.heap_kb as f64,
            event.pause_s,
            event.kind.encoded(),
            event.elapsed_s,
        ];
        for (offset, value) in values.into_iter().enumerate() {
            row[base + offset] = Some(value);
        }
    }

    (assemble("gc", columns, cells), warnings)
}

/// Pivot SAR samples into one frame with one column per (host, metric).
/// Every sample of a host must declare the same metric sequence.
pub fn pivot_sar(samples: &[SarSample]) -> Result<(TidyFrame, Vec<PivotWarning>), PivotError> {
    let hosts = ordered_keys(samples.iter().map(|s| s.hostname.as_str()));
    let mut host_metrics: Vec<Vec<String>> = Vec::with_capacity(hosts.len());
    for host in &hosts {
        let mut metrics: Option<Vec<String>> = None;
        for sample in samples.iter().filter(|s| &s.hostname == host) {
            let names: Vec<String> = sample.metrics.iter().map(|(n, _)| n.clone()).collect();
            match &metrics {
                None => metrics = Some(names),
                Some(existing) if *existing == names => {}
                Some(_) => {
                    return Err(PivotError::ConflictingMetricSet {
                        hostname: host.clone(),
                    })
                }
            }
        }
        host_metrics.push(metrics.unwrap_or_default());
    }

    let mut columns = Vec::new();
    let mut offsets = Vec::with_capacity(hosts.len());
    for (host, metrics) in hosts.iter().zip(&host_metrics) {
        offsets.push(columns.len());
        for metric in metrics {
            columns.push(format!("sar.{host}.{metric}"));
        }
    }

    let mut warnings = Vec::new();
    let mut cells: BTreeMap<EpochMillis, Vec<Option<f64>>> = BTreeMap::new();
    for sample in samples {
        let host_idx = hosts
            .iter()
            .position(|h| h == &sample.hostname)
            .expect("host collected above");
        let base = offsets[host_idx];
        let row = cells
            .entry(sample.ts_ms)
            .or_insert_with(|| vec![None; columns.len()]);
        if sample
            .metrics
            .iter()
            .enumerate()
            .any(|(i, _)| row[base + i].is_some())
        {
            warnings.push(PivotWarning {
                ts: sample.ts_ms,
                key: format!("sar.{}", sample.hostname),
                message: format!(
                    "duplicate SAR sample for {} at {}; keeping the last",
                    sample.hostname, sample.ts_ms
                ),
            });
        }
        for (i, (_, value)) in sample.metrics.iter().enumerate() {
            row[base + i] = *value;
        }
    }

    Ok((assemble("sar", columns, cells), warnings))
}

/// Pivot client (timestamp, counter, value) records wide: rows are distinct
/// timestamps, columns are counters in first-appearance order.
pub fn pivot_client(records: &[ClientRecord]) -> (TidyFrame, Vec<PivotWarning>) {
    let counters = ordered_keys(records.iter().map(|r| r.counter.as_str()));
    let columns: Vec<String> = counters.iter().map(|c| format!("client.{c}")).collect();

    let mut warnings = Vec::new();
    let mut cells: BTreeMap<EpochMillis, Vec<Option<f64>>> = BTreeMap::new();
    for record in records {
        let col = counters
            .iter()
            .position(|c| c == &record.counter)
            .expect("counter collected above");
        let row = cells
            .entry(record.ts_ms)
            .or_insert_with(|| vec![None; columns.len()]);
        if row[col].is_some() {
            warnings.push(PivotWarning {
                ts: record.ts_ms,
                key: columns[col].clone(),
                message: format!(
                    "duplicate client record for {} at {}; keeping the last",
                    record.counter, record.ts_ms
                ),
            });
        }
        row[col] = Some(record.value);
    }

    (assemble("client", columns, cells), warnings)
}

fn assemble(
    tag: &str,
    columns: Vec<String>,
    cells: BTreeMap<EpochMillis, Vec<Option<f64>>>,
) -> TidyFrame {
    let rows = cells
        .into_iter()
        .map(|(ts, cells)| FrameRow { ts, cells })
        .collect();
    TidyFrame::new(tag, columns, rows).expect("pivot output satisfies frame invariants")
}
