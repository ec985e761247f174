//! Line-by-line parsers for the three raw telemetry formats.
//!
//! Each parser turns UTF-8 text into typed records, preserving parsed values
//! verbatim (no clamping, no correction; flagging suspect values is the rule
//! layer's job). Bad lines become [`RawLineIssue`]s instead of aborting, so a
//! single corrupt line cannot destroy a run. Blank lines and `#` comments are
//! skipped and not counted.
//!
//! These parsers are the hand-written half of the dual-pipeline setup; the
//! independent pattern-grammar implementations live in `verify::grammar` and
//! deliberately share no parsing code with this module.

mod client;
mod gc;
mod sar;

pub use client::parse_client;
pub use gc::parse_gc;
pub use sar::{parse_sar, SarFormatError};

use serde::Serialize;

use crate::timebase::EpochMillis;

/// GC event kind: a minor collection or a full-heap collection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GcKind {
    Minor,
    Full,
}

impl GcKind {
    /// Numeric encoding used in tidy frames: 0 = Minor, 1 = Full.
    pub fn encoded(self) -> f64 {
        match self {
            GcKind::Minor => 0.0,
            GcKind::Full => 1.0,
        }
    }
}

/// One garbage-collection event parsed from a GC log line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GcEvent {
    pub wall_clock_ms: EpochMillis,
    /// Seconds since workload start, as printed in the log.
    pub elapsed_s: f64,
    pub kind: GcKind,
    pub mem_before_kb: i64,
    pub mem_after_kb: i64,
    pub heap_kb: i64,
    pub pause_s: f64,
    /// Identity tag of the log file this event came from.
    pub source_id: String,
}

/// One system-activity sample: a timestamp plus the header-declared metrics.
///
/// Metric values follow header order; an empty field in the export means the
/// metric was not sampled at that instant and is carried as `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SarSample {
    pub ts_ms: EpochMillis,
    pub hostname: String,
    pub interval_s: u64,
    pub metrics: Vec<(String, Option<f64>)>,
}

/// One client-driver observation: a (timestamp, counter, value) edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClientRecord {
    pub ts_ms: EpochMillis,
    pub counter: String,
    pub value: f64,
}

/// Why a raw line was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IssueReason {
    /// Line structure does not match the grammar.
    Malformed,
    /// A numeric field failed to parse or violated its range.
    BadNumber,
    /// The timestamp field failed to parse or names an impossible instant.
    BadTimestamp,
}

/// One rejected input line, kept verbatim for the report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawLineIssue {
    pub source_id: String,
    /// 1-based line number in the input.
    pub line_no: usize,
    pub raw: String,
    pub reason: IssueReason,
}

/// Yields `(line_no, content)` for every non-blank, non-comment line,
/// tolerating Windows line endings.
pub(crate) fn content_lines(input: &str) -> impl Iterator<Item = (usize, &str)> {
    input.lines().enumerate().filter_map(|(i, line)| {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

/// Parses a non-negative integer field consisting solely of ASCII digits.
pub(crate) fn parse_digits_i64(text: &str) -> Option<i64> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    text.parse().ok()
}

/// Parses a finite decimal; rejects NaN and infinities so frames stay
/// comparable cell-for-cell.
pub(crate) fn parse_finite_f64(text: &str) -> Option<f64> {
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}
