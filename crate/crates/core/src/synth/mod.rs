//! Deterministic synthetic-telemetry generator with ground truth.
//!
//! Emulates the shape of a driver-plus-server workload: per-JVM GC logs with
//! irregular event-driven timestamps, SAR samples on an exact grid, and
//! client counters on a faster exact grid. Values are decided first in a
//! typed model and then serialized, and the expected merged frame is
//! assembled directly from that model, never by running the pipeline under
//! test, so tests have an independent known output.
//!
//! Identical (config, seed) pairs produce byte-identical output; the defect
//! catalog in [`inject`] applies one localized, seeded mutation at a time
//! and records the detection outcome it must produce.

mod defect;

pub use defect::{inject, DefectKind, DefectSpec, InjectError};

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{ClientRecord, GcEvent, GcKind, IssueReason, SarSample};
use crate::tidy::{write_frame, FrameDims, FrameRow, MergeStats, TidyFrame, GC_FIELDS};
use crate::timebase::{format_iso8601, format_world_clock_colon, EpochMillis};

/// Mean of the bounded exponential-like GC inter-arrival draw, in seconds.
const GC_MEAN_GAP_S: f64 = 8.0;
/// GC gaps are clamped to [1 s, 60 s].
const GC_GAP_BOUNDS_S: (f64, f64) = (1.0, 60.0);
/// Every n-th collection of a JVM is a Full GC.
const FULL_GC_PERIOD: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserGroup {
    pub name: String,
    pub max_users: u32,
    pub think_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub duration_s: u64,
    pub sar_interval_s: u64,
    pub client_interval_s: u64,
    pub jvm_count: usize,
    pub sar_hosts: Vec<String>,
    pub sar_metrics: Vec<String>,
    pub client_counters: Vec<String>,
    pub user_groups: Vec<UserGroup>,
    pub client_zone_offset_min: i32,
    pub base_epoch_ms: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            duration_s: 300,
            sar_interval_s: 10,
            client_interval_s: 5,
            jvm_count: 3,
            sar_hosts: vec!["web01".to_string()],
            sar_metrics: vec![
                "%user".to_string(),
                "%system".to_string(),
                "%idle".to_string(),
                "cpi".to_string(),
                "rxpck_per_s".to_string(),
            ],
            client_counters: vec![
                "server_time_ms".to_string(),
                "users".to_string(),
                "kb_received_per_s".to_string(),
            ],
            user_groups: vec![
                UserGroup {
                    name: "browse".to_string(),
                    max_users: 40,
                    think_time_s: 5.0,
                },
                UserGroup {
                    name: "checkout".to_string(),
                    max_users: 20,
                    think_time_s: 10.0,
                },
            ],
            client_zone_offset_min: 0,
            // 2015-07-21T10:15:00Z
            base_epoch_ms: 1_437_473_700_000,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("{field} must be positive")]
    NonPositive { field: &'static str },
    #[error("duration_s must cover at least one interval of every source")]
    DurationTooShort,
    #[error("{field} must not be empty")]
    Empty { field: &'static str },
    #[error("base_epoch_ms must be a whole second (multiple of 1000)")]
    BaseNotWholeSecond,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.sar_interval_s == 0 {
            return Err(ConfigError::NonPositive {
                field: "sar_interval_s",
            });
        }
        if self.client_interval_s == 0 {
            return Err(ConfigError::NonPositive {
                field: "client_interval_s",
            });
        }
        if self.jvm_count == 0 {
            return Err(ConfigError::NonPositive { field: "jvm_count" });
        }
        if self.duration_s < self.sar_interval_s.max(self.client_interval_s) {
            return Err(ConfigError::DurationTooShort);
        }
        for (field, empty) in [
            ("sar_hosts", self.sar_hosts.is_empty()),
            ("sar_metrics", self.sar_metrics.is_empty()),
            ("client_counters", self.client_counters.is_empty()),
            ("user_groups", self.user_groups.is_empty()),
        ] {
            if empty {
                return Err(ConfigError::Empty { field });
            }
        }
        if self.base_epoch_ms % 1000 != 0 {
            return Err(ConfigError::BaseNotWholeSecond);
        }
        Ok(())
    }

    /// JVM identity tags, zero-padded so lexicographic file order equals
    /// numeric order.
    pub fn jvm_ids(&self) -> Vec<String> {
        let width = self.jvm_count.to_string().len();
        (1..=self.jvm_count)
            .map(|i| format!("jvm{i:0width$}"))
            .collect()
    }

    pub fn total_users(&self) -> u32 {
        self.user_groups.iter().map(|g| g.max_users).sum()
    }
}

/// The typed value model every artifact is derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadModel {
    /// Per JVM: events in file order (normally time order).
    pub gc: Vec<(String, Vec<GcEvent>)>,
    /// Per host: samples in time order.
    pub sar: Vec<(String, Vec<SarSample>)>,
    /// Records in file order.
    pub client: Vec<ClientRecord>,
}

/// What a quality run over the emitted files must detect.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExpectedOutcome {
    /// A rule finding with this id at this location.
    Finding {
        rule_id: String,
        scope: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        ts_epoch_ms: Option<i64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        index: Option<usize>,
    },
    /// A parser issue on this line.
    ParseIssue {
        source_id: String,
        reason: IssueReason,
        line_no: usize,
    },
    /// Comparing the processed frame against the clean baseline frame must
    /// be Inconsistent with at least this many row diffs.
    CleanFrameDivergence { min_row_diffs: usize },
}

/// The expected end state of a clean (or injected) run, built forward from
/// the model.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub frame: TidyFrame,
    pub merge_stats: MergeStats,
    pub expected: Vec<ExpectedOutcome>,
}

/// Everything one generation produces: raw file texts keyed by relative
/// path, the ground truth, and the model the defect injector mutates.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub config: SynthConfig,
    pub seed: u64,
    pub defects: Vec<DefectSpec>,
    pub files: BTreeMap<String, String>,
    pub ground_truth: GroundTruth,
    pub model: WorkloadModel,
}

/// Generate raw files plus ground truth for one seed.
pub fn generate(config: &SynthConfig, seed: u64) -> Result<SynthOutput, ConfigError> {
    config.validate()?;
    let model = build_model(config, seed);
    let files = render_files(config, &model);
    let ground_truth = build_ground_truth(&model, Vec::new());
    Ok(SynthOutput {
        config: config.clone(),
        seed,
        defects: Vec::new(),
        files,
        ground_truth,
        model,
    })
}

fn build_model(config: &SynthConfig, seed: u64) -> WorkloadModel {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let end_ms = config.base_epoch_ms + config.duration_s as i64 * 1000;

    let mut gc = Vec::with_capacity(config.jvm_count);
    for jvm in config.jvm_ids() {
        let mut rng = ChaCha8Rng::seed_from_u64(master.gen());
        let mut events = Vec::new();
        let mut t = config.base_epoch_ms;
        loop {
            let u: f64 = rng.gen();
            let gap_s =
                (-GC_MEAN_GAP_S * (1.0 - u).ln()).clamp(GC_GAP_BOUNDS_S.0, GC_GAP_BOUNDS_S.1);
            t += (gap_s * 1000.0).round() as i64;
            if t > end_ms {
                break;
            }
            let kind = if (events.len() + 1) % FULL_GC_PERIOD == 0 {
                GcKind::Full
            } else {
                GcKind::Minor
            };
            events.push(GcEvent {
                wall_clock_ms: EpochMillis(t),
                elapsed_s: (t - config.base_epoch_ms) as f64 / 1000.0,
                kind,
                mem_before_kb: rng.gen_range(400_000..=900_000),
                mem_after_kb: rng.gen_range(100_000..=300_000),
                heap_kb: 1_048_576,
                pause_s: rng.gen_range(0.01..2.0),
                source_id: jvm.clone(),
            });
        }
        gc.push((jvm, events));
    }

    let sar_ticks = config.duration_s / config.sar_interval_s;
    let mut sar = Vec::with_capacity(config.sar_hosts.len());
    for host in &config.sar_hosts {
        let mut rng = ChaCha8Rng::seed_from_u64(master.gen());
        let mut samples = Vec::new();
        for i in 0..=sar_ticks {
            let ts = config.base_epoch_ms + (i * config.sar_interval_s) as i64 * 1000;
            let mut pct_sum = 0.0;
            let metrics = config
                .sar_metrics
                .iter()
                .map(|name| {
                    (
                        name.clone(),
                        Some(sar_metric_value(name, &mut pct_sum, &mut rng)),
                    )
                })
                .collect();
            samples.push(SarSample {
                ts_ms: EpochMillis(ts),
                hostname: host.clone(),
                interval_s: config.sar_interval_s,
                metrics,
            });
        }
        sar.push((host.clone(), samples));
    }

    let client_ticks = config.duration_s / config.client_interval_s;
    let mut rng = ChaCha8Rng::seed_from_u64(master.gen());
    let mut client = Vec::new();
    for i in 0..=client_ticks {
        let ts = config.base_epoch_ms + (i * config.client_interval_s) as i64 * 1000;
        for counter in &config.client_counters {
            client.push(ClientRecord {
                ts_ms: EpochMillis(ts),
                counter: counter.clone(),
                value: client_counter_value(
                    counter,
                    i,
                    client_ticks,
                    config.total_users(),
                    &mut rng,
                ),
            });
        }
    }

    WorkloadModel { gc, sar, client }
}

fn sar_metric_value(name: &str, pct_sum: &mut f64, rng: &mut ChaCha8Rng) -> f64 {
    match name {
        "%idle" => (100.0 - *pct_sum).max(0.0),
        "cpi" => rng.gen_range(0.4..2.0),
        "rxpck_per_s" => rng.gen_range(100.0..5000.0),
        n if n.starts_with('%') || n.ends_with("_pct") => {
            let value = match n {
                "%user" => rng.gen_range(5.0..60.0),
                "%system" => rng.gen_range(2.0..20.0),
                _ => rng.gen_range(1.0..20.0),
            };
            *pct_sum += value;
            value
        }
        _ => rng.gen_range(0.0..1000.0),
    }
}

fn client_counter_value(
    name: &str,
    tick: u64,
    last_tick: u64,
    total_users: u32,
    rng: &mut ChaCha8Rng,
) -> f64 {
    match name {
        // Virtual users ramp linearly from 1 to the configured maximum; the
        // real ramp schedule is unspecified, so a linear one stands in.
        "users" => {
            let fraction = tick as f64 / last_tick.max(1) as f64;
            (1.0 + fraction * (total_users.max(1) - 1) as f64).round()
        }
        "server_time_ms" => rng.gen_range(50.0..500.0),
        "kb_received_per_s" => rng.gen_range(100.0..2000.0),
        _ => rng.gen_range(0.0..1000.0),
    }
}

pub(crate) fn gc_file_name(jvm: &str) -> String {
    format!("gc_{jvm}.log")
}

/// Invert the layout naming: `gc_<jvm>.log` -> `<jvm>`.
pub fn gc_source_id(file_name: &str) -> &str {
    let s = file_name.strip_prefix("gc_").unwrap_or(file_name);
    s.strip_suffix(".log").unwrap_or(s)
}

pub(crate) fn sar_file_name(host: &str) -> String {
    format!("sar_{host}.dat")
}

pub(crate) const CLIENT_FILE_NAME: &str = "client.csv";

pub(crate) fn render_gc_line(event: &GcEvent) -> String {
    let kind = match event.kind {
        GcKind::Minor => "GC",
        GcKind::Full => "Full GC",
    };
    format!(
        "{}: {}: [{kind} {}K->{}K({}K), {} secs]",
        format_iso8601(event.wall_clock_ms, 0),
        event.elapsed_s,
        event.mem_before_kb,
        event.mem_after_kb,
        event.heap_kb,
        event.pause_s
    )
}

pub(crate) fn render_sar_file(metrics: &[String], samples: &[SarSample]) -> String {
    let mut text = String::from("hostname;interval;timestamp");
    for metric in metrics {
        text.push(';');
        text.push_str(metric);
    }
    text.push('\n');
    for sample in samples {
        text.push_str(&format!(
            "{};{};{}",
            sample.hostname,
            sample.interval_s,
            sample.ts_ms.0 / 1000
        ));
        for (_, value) in &sample.metrics {
            text.push(';');
            if let Some(v) = value {
                text.push_str(&v.to_string());
            }
        }
        text.push('\n');
    }
    text
}

pub(crate) fn render_client_line(record: &ClientRecord, zone_offset_min: i32) -> String {
    format!(
        "{},{},{}",
        format_world_clock_colon(record.ts_ms, zone_offset_min),
        record.counter,
        record.value
    )
}

pub(crate) fn render_files(
    config: &SynthConfig,
    model: &WorkloadModel,
) -> BTreeMap<String, String> {
    let mut files = BTreeMap::new();
    for (jvm, events) in &model.gc {
        let mut text = String::new();
        for event in events {
            text.push_str(&render_gc_line(event));
            text.push('\n');
        }
        files.insert(gc_file_name(jvm), text);
    }
    for (host, samples) in &model.sar {
        files.insert(
            sar_file_name(host),
            render_sar_file(&config.sar_metrics, samples),
        );
    }
    let mut text = String::new();
    for record in &model.client {
        text.push_str(&render_client_line(record, config.client_zone_offset_min));
        text.push('\n');
    }
    files.insert(CLIENT_FILE_NAME.to_string(), text);
    files
}

struct SourceGrid {
    columns: Vec<String>,
    cells: BTreeMap<i64, Vec<Option<f64>>>,
}

impl SourceGrid {
    fn dims(&self) -> FrameDims {
        FrameDims {
            rows: self.cells.len(),
            cols: self.columns.len(),
        }
    }

    fn missing(&self) -> usize {
        let present: usize = self
            .cells
            .values()
            .map(|row| row.iter().filter(|c| c.is_some()).count())
            .sum();
        self.cells.len() * self.columns.len() - present
    }
}

/// Assemble the expected merged frame and stats directly from the model.
pub(crate) fn build_ground_truth(
    model: &WorkloadModel,
    expected: Vec<ExpectedOutcome>,
) -> GroundTruth {
    // Grids follow the pipeline's file-discovery order: sorted file names,
    // which is sorted source ids (JVM ids are zero-padded).
    let mut sorted_gc: Vec<&(String, Vec<GcEvent>)> = model.gc.iter().collect();
    sorted_gc.sort_by(|a, b| a.0.cmp(&b.0));
    let mut sorted_sar: Vec<&(String, Vec<SarSample>)> = model.sar.iter().collect();
    sorted_sar.sort_by(|a, b| a.0.cmp(&b.0));

    // GC grid: six columns per JVM that has at least one event; duplicate
    // timestamps within one JVM resolve last-wins.
    let active_jvms: Vec<&(String, Vec<GcEvent>)> = sorted_gc
        .iter()
        .copied()
        .filter(|(_, e)| !e.is_empty())
        .collect();
    let mut gc = SourceGrid {
        columns: active_jvms
            .iter()
            .flat_map(|(jvm, _)| GC_FIELDS.iter().map(move |f| format!("gc.{jvm}.{f}")))
            .collect(),
        cells: BTreeMap::new(),
    };
    let gc_width = gc.columns.len();
    for (index, (_, events)) in active_jvms.iter().enumerate() {
        let base = index * GC_FIELDS.len();
        for event in events {
            let row = gc
                .cells
                .entry(event.wall_clock_ms.0)
                .or_insert_with(|| vec![None; gc_width]);
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
    }

    // SAR grid: one column per (host, metric) in host order.
    let mut sar = SourceGrid {
        columns: sorted_sar
            .iter()
            .flat_map(|(host, samples)| {
                let names: Vec<String> = samples
                    .first()
                    .map(|s| s.metrics.iter().map(|(n, _)| n.clone()).collect())
                    .unwrap_or_default();
                names.into_iter().map(move |m| format!("sar.{host}.{m}"))
            })
            .collect(),
        cells: BTreeMap::new(),
    };
    let sar_width = sar.columns.len();
    let mut offset = 0;
    for (_, samples) in &sorted_sar {
        let host_cols = samples.first().map(|s| s.metrics.len()).unwrap_or(0);
        for sample in samples {
            let row = sar
                .cells
                .entry(sample.ts_ms.0)
                .or_insert_with(|| vec![None; sar_width]);
            for (i, (_, value)) in sample.metrics.iter().enumerate() {
                row[offset + i] = *value;
            }
        }
        offset += host_cols;
    }

    // Client grid: counters in first-appearance order, last-wins.
    let mut counters: Vec<&str> = Vec::new();
    for record in &model.client {
        if !counters.contains(&record.counter.as_str()) {
            counters.push(&record.counter);
        }
    }
    let mut client = SourceGrid {
        columns: counters.iter().map(|c| format!("client.{c}")).collect(),
        cells: BTreeMap::new(),
    };
    let client_width = client.columns.len();
    for record in &model.client {
        let col = counters
            .iter()
            .position(|c| *c == record.counter)
            .expect("counter collected above");
        client
            .cells
            .entry(record.ts_ms.0)
            .or_insert_with(|| vec![None; client_width])[col] = Some(record.value);
    }

    // Interlace the three grids.
    let grids = [&gc, &sar, &client];
    let columns: Vec<String> = grids.iter().flat_map(|g| g.columns.clone()).collect();
    let mut merged: BTreeMap<i64, Vec<Option<f64>>> = BTreeMap::new();
    for grid in grids {
        for ts in grid.cells.keys() {
            merged
                .entry(*ts)
                .or_insert_with(|| vec![None; columns.len()]);
        }
    }
    let mut offset = 0;
    for grid in grids {
        for (ts, cells) in &grid.cells {
            merged.get_mut(ts).expect("row inserted above")[offset..offset + cells.len()]
                .copy_from_slice(cells);
        }
        offset += grid.columns.len();
    }

    let rows: Vec<FrameRow> = merged
        .into_iter()
        .map(|(ts, cells)| FrameRow {
            ts: EpochMillis(ts),
            cells,
        })
        .collect();
    let inputs: Vec<FrameDims> = grids.iter().map(|g| g.dims()).collect();
    let source_slots: usize = inputs.iter().map(|d| d.rows * d.cols).sum();
    let merge_stats = MergeStats {
        rows: rows.len(),
        cols: columns.len(),
        artificial_missing: rows.len() * columns.len() - source_slots,
        source_missing: grids.iter().map(|g| g.missing()).sum(),
        inputs,
    };
    let frame = TidyFrame::new("merged", columns, rows).expect("ground truth frame is valid");
    GroundTruth {
        frame,
        merge_stats,
        expected,
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    config: &'a SynthConfig,
    seed: u64,
    defects: &'a [DefectSpec],
}

/// Write the output directory: raw files, `ground_truth/merged.csv`,
/// `ground_truth/expected_findings.json`, `ground_truth/merge_stats.json`,
/// and `manifest.json`.
pub fn write_to_dir(output: &SynthOutput, dir: &Path) -> std::io::Result<()> {
    let ground_truth_dir = dir.join("ground_truth");
    std::fs::create_dir_all(&ground_truth_dir)?;
    for (name, content) in &output.files {
        std::fs::write(dir.join(name), content)?;
    }

    let mut merged =
        std::io::BufWriter::new(std::fs::File::create(ground_truth_dir.join("merged.csv"))?);
    write_frame(&output.ground_truth.frame, &mut merged)
        .map_err(|e| std::io::Error::other(e.to_string()))?;
    merged.into_inner()?;

    let findings = serde_json::to_string_pretty(&output.ground_truth.expected)?;
    let mut f = std::fs::File::create(ground_truth_dir.join("expected_findings.json"))?;
    writeln!(f, "{findings}")?;

    let stats = serde_json::to_string_pretty(&output.ground_truth.merge_stats)?;
    let mut f = std::fs::File::create(ground_truth_dir.join("merge_stats.json"))?;
    writeln!(f, "{stats}")?;

    let manifest = serde_json::to_string_pretty(&Manifest {
        config: &output.config,
        seed: output.seed,
        defects: &output.defects,
    })?;
    let mut f = std::fs::File::create(dir.join("manifest.json"))?;
    writeln!(f, "{manifest}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_byte_deterministic() {
        let config = SynthConfig::default();
        let a = generate(&config, 42).unwrap();
        let b = generate(&config, 42).unwrap();
        assert_eq!(a.files, b.files);
        assert_eq!(a.ground_truth.frame.rows(), b.ground_truth.frame.rows());
        assert_eq!(a.ground_truth.merge_stats, b.ground_truth.merge_stats);
    }

    #[test]
    fn sixty_second_run_has_expected_grid_sizes() {
        let config = SynthConfig {
            duration_s: 60,
            ..SynthConfig::default()
        };
        let out = generate(&config, 42).unwrap();
        // 7 SAR rows (t = 0..60 step 10) and 13 client ticks (step 5).
        let (_, sar_rows) = &out.model.sar[0];
        assert_eq!(sar_rows.len(), 7);
        let distinct_client: std::collections::BTreeSet<i64> =
            out.model.client.iter().map(|r| r.ts_ms.0).collect();
        assert_eq!(distinct_client.len(), 13);
        let sar_file = &out.files["sar_web01.dat"];
        assert_eq!(sar_file.lines().count(), 8); // header + 7 rows
    }

    #[test]
    fn clean_ground_truth_has_no_expected_findings() {
        let out = generate(&SynthConfig::default(), 7).unwrap();
        assert!(out.ground_truth.expected.is_empty());
        assert!(out.defects.is_empty());
    }

    #[test]
    fn different_seeds_give_different_gc_times() {
        let config = SynthConfig::default();
        let a = generate(&config, 1).unwrap();
        let b = generate(&config, 2).unwrap();
        let times = |o: &SynthOutput| -> Vec<i64> {
            o.model.gc[0].1.iter().map(|e| e.wall_clock_ms.0).collect()
        };
        assert_ne!(times(&a), times(&b));
    }

    #[test]
    fn ground_truth_dimension_arithmetic_holds() {
        let out = generate(&SynthConfig::default(), 3).unwrap();
        let stats = &out.ground_truth.merge_stats;
        assert_eq!(stats.inputs.len(), 3);
        assert!(stats.rows <= stats.row_bound());
        assert_eq!(stats.cols, stats.col_sum());
        assert_eq!(
            out.ground_truth.frame.missing_cells(),
            stats.artificial_missing + stats.source_missing
        );
        // Default config: 3 JVMs x 6 cols, 1 host x 5 metrics, 3 counters.
        assert_eq!(stats.cols, 18 + 5 + 3);
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        let mut config = SynthConfig {
            sar_interval_s: 0,
            ..SynthConfig::default()
        };
        assert!(config.validate().is_err());
        config.sar_interval_s = 10;
        config.duration_s = 4;
        assert_eq!(config.validate(), Err(ConfigError::DurationTooShort));
        config.duration_s = 300;
        config.jvm_count = 0;
        assert!(config.validate().is_err());
        config.jvm_count = 3;
        config.base_epoch_ms = 1500;
        assert_eq!(config.validate(), Err(ConfigError::BaseNotWholeSecond));
    }

    #[test]
    fn jvm_ids_pad_for_lexicographic_order() {
        let config = SynthConfig {
            jvm_count: 12,
            ..SynthConfig::default()
        };
        let ids = config.jvm_ids();
        assert_eq!(ids[0], "jvm01");
        assert_eq!(ids[11], "jvm12");
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(sorted, ids);
    }

    #[test]
    fn write_to_dir_lays_out_the_contract_files() {
        let out = generate(&SynthConfig::default(), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_to_dir(&out, dir.path()).unwrap();
        for name in [
            "gc_jvm1.log",
            "gc_jvm2.log",
            "gc_jvm3.log",
            "sar_web01.dat",
            "client.csv",
            "manifest.json",
            "ground_truth/merged.csv",
            "ground_truth/expected_findings.json",
            "ground_truth/merge_stats.json",
        ] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let manifest: serde_json::Value = serde_json::from_str(
            &std::fs::read_to_string(dir.path().join("manifest.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest["seed"], 5);
        assert_eq!(manifest["config"]["jvm_count"], 3);
    }
}
