//! Dual-pipeline differential verification and third-party comparison.
//!
//! The same raw bytes are processed by two independently written
//! implementations: pipeline A is the hand-written line parser in `ingest`
//! plus the pivots in `tidy`; pipeline B is the declarative pattern-grammar
//! implementation in [`grammar`], built on regular expressions and a
//! different calendar library. The two share no parsing or time-conversion
//! code, only the output frame container, so a defect in either one shows
//! up as a disagreement when their frames are compared entry-by-entry.
//!
//! Comparison covers schema (column names AND order), the timestamp row
//! sets, and every common cell; presence/absence of a cell is an
//! unconditional mismatch. Tolerance is zero by default (clean inputs must
//! agree bit-exactly) and exists only for external datasets produced by
//! other tools.

pub mod grammar;

use serde::Serialize;
use thiserror::Error;

use crate::ingest::{self, RawLineIssue};
use crate::tidy::{self, FrameReadError, TidyFrame};

/// Which processing channel produced a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PipelineId {
    A,
    B,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    Gc,
    Sar,
    Client,
}

/// Time-base options handed to both pipelines.
#[derive(Debug, Clone)]
pub struct ParseOptions {
    /// Log-file identity tag used for GC column namespacing.
    pub source_id: String,
    /// Zone applied to GC timestamps that carry no offset of their own.
    pub gc_zone_offset_min: i32,
    /// Zone of the client machine (client timestamps carry none).
    pub client_zone_offset_min: i32,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            source_id: "gc".to_string(),
            gc_zone_offset_min: 0,
            client_zone_offset_min: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    Inconsistent,
}

impl Serialize for Verdict {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(match self {
            Verdict::Consistent => "consistent",
            Verdict::Inconsistent => "inconsistent",
        })
    }
}

/// Column sequence mismatch at one position; `None` means the frame has no
/// column there (shorter schema).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SchemaDiff {
    pub position: usize,
    pub column_a: Option<String>,
    pub column_b: Option<String>,
}

/// A timestamp present in exactly one frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowDiff {
    pub ts_epoch_ms: i64,
    pub in_a: bool,
    pub in_b: bool,
}

/// One differing cell at a (timestamp, column) both frames share.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellDiff {
    pub ts_epoch_ms: i64,
    pub column: String,
    pub value_a: Option<f64>,
    pub value_b: Option<f64>,
}

/// Entry-by-entry comparison result. `verdict` is Consistent exactly when
/// all three diff classes are empty and neither pipeline failed. Sample
/// lists are capped; the counts are exact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub verdict: Verdict,
    pub tolerance: f64,
    pub schema_diffs: Vec<SchemaDiff>,
    pub row_diff_count: usize,
    pub sample_row_diffs: Vec<RowDiff>,
    pub cell_diff_count: usize,
    pub sample_cell_diffs: Vec<CellDiff>,
    pub pipeline_failures: Vec<(PipelineId, String)>,
}

/// Default cap on reported sample diffs, keeping reports bounded on
/// pathological inputs.
pub const DEFAULT_DIFF_CAP: usize = 1000;

/// Compare two frames entry-by-entry with the default sample cap.
pub fn compare_frames(a: &TidyFrame, b: &TidyFrame, tolerance: f64) -> ComparisonReport {
    compare_frames_capped(a, b, tolerance, DEFAULT_DIFF_CAP)
}

pub fn compare_frames_capped(
    a: &TidyFrame,
    b: &TidyFrame,
    tolerance: f64,
    cap: usize,
) -> ComparisonReport {
    debug_assert!(tolerance >= 0.0);

    let mut schema_diffs = Vec::new();
    let max_cols = a.n_cols().max(b.n_cols());
    for position in 0..max_cols {
        let column_a = a.columns().get(position);
        let column_b = b.columns().get(position);
        if column_a != column_b {
            schema_diffs.push(SchemaDiff {
                position,
                column_a: column_a.cloned(),
                column_b: column_b.cloned(),
            });
        }
    }

    let mut row_diff_count = 0;
    let mut sample_row_diffs = Vec::new();
    let mut common_rows: Vec<(usize, usize)> = Vec::new();
    {
        // Row timestamps are strictly increasing, so a single linear sweep
        // classifies every timestamp.
        let (mut i, mut j) = (0, 0);
        let rows_a = a.rows();
        let rows_b = b.rows();
        loop {
            match (rows_a.get(i), rows_b.get(j)) {
                (Some(ra), Some(rb)) if ra.ts == rb.ts => {
                    common_rows.push((i, j));
                    i += 1;
                    j += 1;
                }
                (Some(ra), Some(rb)) => {
                    let a_first = ra.ts < rb.ts;
                    let diff = RowDiff {
                        ts_epoch_ms: if a_first { ra.ts.0 } else { rb.ts.0 },
                        in_a: a_first,
                        in_b: !a_first,
                    };
                    row_diff_count += 1;
                    if sample_row_diffs.len() < cap {
                        sample_row_diffs.push(diff);
                    }
                    if a_first {
                        i += 1;
                    } else {
                        j += 1;
                    }
                }
                (Some(ra), None) => {
                    row_diff_count += 1;
                    if sample_row_diffs.len() < cap {
                        sample_row_diffs.push(RowDiff {
                            ts_epoch_ms: ra.ts.0,
                            in_a: true,
                            in_b: false,
                        });
                    }
                    i += 1;
                }
                (None, Some(rb)) => {
                    row_diff_count += 1;
                    if sample_row_diffs.len() < cap {
                        sample_row_diffs.push(RowDiff {
                            ts_epoch_ms: rb.ts.0,
                            in_a: false,
                            in_b: true,
                        });
                    }
                    j += 1;
                }
                (None, None) => break,
            }
        }
    }

    // Cells are compared per column NAME over rows both frames share, so a
    // swapped column order reports as a schema diff rather than a wall of
    // spurious cell diffs.
    let mut cell_diff_count = 0;
    let mut sample_cell_diffs = Vec::new();
    for (col_a, name) in a.columns().iter().enumerate() {
        let Some(col_b) = b.column_index(name) else {
            continue;
        };
        for &(row_a, row_b) in &common_rows {
            let value_a = a.cell(row_a, col_a);
            let value_b = b.cell(row_b, col_b);
            let mismatch = match (value_a, value_b) {
                (Some(va), Some(vb)) => (va - vb).abs() > tolerance,
                (None, None) => false,
                _ => true,
            };
            if mismatch {
                cell_diff_count += 1;
                if sample_cell_diffs.len() < cap {
                    sample_cell_diffs.push(CellDiff {
                        ts_epoch_ms: a.rows()[row_a].ts.0,
                        column: name.clone(),
                        value_a,
                        value_b,
                    });
                }
            }
        }
    }

    let consistent = schema_diffs.is_empty() && row_diff_count == 0 && cell_diff_count == 0;
    ComparisonReport {
        verdict: if consistent {
            Verdict::Consistent
        } else {
            Verdict::Inconsistent
        },
        tolerance,
        schema_diffs,
        row_diff_count,
        sample_row_diffs,
        cell_diff_count,
        sample_cell_diffs,
        pipeline_failures: Vec::new(),
    }
}

/// One pipeline's output for a source file.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub frame: TidyFrame,
    pub issues: Vec<RawLineIssue>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    SarFormat(#[from] ingest::SarFormatError),
    #[error(transparent)]
    Pivot(#[from] tidy::PivotError),
    #[error("{0}")]
    Grammar(String),
}

/// Both pipelines' results for the same input bytes.
#[derive(Debug)]
pub struct DualRun {
    pub a: Result<PipelineOutput, PipelineError>,
    pub b: Result<PipelineOutput, PipelineError>,
}

impl DualRun {
    /// Entry-by-entry report for the two pipelines. One pipeline failing
    /// while the other succeeds is itself Inconsistent.
    pub fn report(&self, tolerance: f64) -> ComparisonReport {
        match (&self.a, &self.b) {
            (Ok(a), Ok(b)) => compare_frames(&a.frame, &b.frame, tolerance),
            _ => {
                let mut failures = Vec::new();
                if let Err(e) = &self.a {
                    failures.push((PipelineId::A, e.to_string()));
                }
                if let Err(e) = &self.b {
                    failures.push((PipelineId::B, e.to_string()));
                }
                ComparisonReport {
                    verdict: Verdict::Inconsistent,
                    tolerance,
                    schema_diffs: Vec::new(),
                    row_diff_count: 0,
                    sample_row_diffs: Vec::new(),
                    cell_diff_count: 0,
                    sample_cell_diffs: Vec::new(),
                    pipeline_failures: failures,
                }
            }
        }
    }
}

fn pipeline_a(
    kind: SourceKind,
    input: &str,
    opts: &ParseOptions,
) -> Result<PipelineOutput, PipelineError> {
    match kind {
        SourceKind::Gc => {
            let (events, issues) =
                ingest::parse_gc(input, &opts.source_id, opts.gc_zone_offset_min);
            let (frame, _) = tidy::pivot_gc(&events);
            Ok(PipelineOutput { frame, issues })
        }
        SourceKind::Sar => {
            let (samples, issues) = ingest::parse_sar(input, "sar")?;
            let (frame, _) = tidy::pivot_sar(&samples)?;
            Ok(PipelineOutput { frame, issues })
        }
        SourceKind::Client => {
            let (records, issues) =
                ingest::parse_client(input, "client", opts.client_zone_offset_min);
            let (frame, _) = tidy::pivot_client(&records);
            Ok(PipelineOutput { frame, issues })
        }
    }
}

fn pipeline_b(
    kind: SourceKind,
    input: &str,
    opts: &ParseOptions,
) -> Result<PipelineOutput, PipelineError> {
    match kind {
        SourceKind::Gc => Ok(grammar::gc_frame(input, opts)),
        SourceKind::Sar => grammar::sar_frame(input),
        SourceKind::Client => Ok(grammar::client_frame(input, opts)),
    }
}

/// Run both independent pipelines over the same raw input.
pub fn run_dual(kind: SourceKind, input: &str, opts: &ParseOptions) -> DualRun {
    DualRun {
        a: pipeline_a(kind, input, opts),
        b: pipeline_b(kind, input, opts),
    }
}

/// Comparison of an external (third-party) frame against both pipelines.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExternalReport {
    pub verdict: Verdict,
    pub against_a: ComparisonReport,
    pub against_b: ComparisonReport,
}

/// Read an external dataset in the canonical tidy format and compare it with
/// both pipeline outputs. The report identifies which pipeline(s) disagree.
pub fn compare_external(
    a: &TidyFrame,
    b: &TidyFrame,
    external_text: &str,
    tolerance: f64,
) -> Result<ExternalReport, FrameReadError> {
    let external = tidy::read_frame_from_str(external_text, "external")?;
    let against_a = compare_frames(a, &external, tolerance);
    let against_b = compare_frames(b, &external, tolerance);
    let verdict =
        if against_a.verdict == Verdict::Consistent && against_b.verdict == Verdict::Consistent {
            Verdict::Consistent
        } else {
            Verdict::Inconsistent
        };
    Ok(ExternalReport {
        verdict,
        against_a,
        against_b,
    })
}
