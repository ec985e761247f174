//! Pipeline B: a declarative pattern-grammar implementation of the three
//! raw formats.
//!
//! Structure is matched with anchored regular expressions and calendar
//! conversion is delegated to chrono, so this pipeline shares no parsing or
//! time arithmetic with the hand-written `ingest`/`timebase` path. It
//! assembles tidy frames directly from its captures, implementing the same
//! output contract (column namespaces, declaration order, last-wins
//! duplicates) from scratch.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use chrono::NaiveDate;
use regex::Regex;

use crate::ingest::{IssueReason, RawLineIssue};
use crate::tidy::{FrameRow, TidyFrame, GC_FIELDS};
use crate::timebase::EpochMillis;

use super::{ParseOptions, PipelineError, PipelineOutput};

const PIPELINE_TAG: &str = "pipeline-b";

static GC_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(?P<ts>.*): (?P<elapsed>\S+): \[(?P<kind>Full GC|GC) (?P<before>.*?)K->(?P<after>.*?)K\((?P<heap>.*?)K\), (?P<pause>.*) secs\]$",
    )
    .expect("static pattern")
});

static ISO_TS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^(?P<y>\d{4})-(?P<mo>\d{2})-(?P<d>\d{2})T(?P<h>\d{2}):(?P<mi>\d{2}):(?P<s>\d{2})(?:\.(?P<frac>\d{1,3}))?(?P<off>Z|[+-]\d{2}:\d{2})?$",
    )
    .expect("static pattern")
});

static COLON_TS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?P<y>\d{4}):(?P<mo>\d{2}):(?P<d>\d{2}):(?P<h>\d{2}):(?P<mi>\d{2}):(?P<s>\d{2})$")
        .expect("static pattern")
});

static CLIENT_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^(?P<ts>[^,]*),(?P<counter>[^,]*),(?P<value>[^,]*)$").expect("static pattern")
});

static SAR_HEADER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^hostname;interval;timestamp;(?P<metrics>.+)$").expect("static pattern")
});

static DIGITS: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^\d+$").expect("static pattern"));
static SIGNED_DIGITS: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^-?\d+$").expect("static pattern"));

fn lines_of(input: &str) -> impl Iterator<Item = (usize, &str)> {
    input.lines().enumerate().filter_map(|(i, line)| {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let trimmed = line.trim();
        (!trimmed.is_empty() && !trimmed.starts_with('#')).then_some((i + 1, line))
    })
}

fn civil_to_epoch_ms(
    (y, mo, d): (i32, u32, u32),
    (h, mi, s, ms): (u32, u32, u32, u32),
    offset_min: i32,
) -> Option<i64> {
    let naive = NaiveDate::from_ymd_opt(y, mo, d)?.and_hms_milli_opt(h, mi, s, ms)?;
    Some(naive.and_utc().timestamp_millis() - offset_min as i64 * 60_000)
}

fn iso_to_epoch_ms(text: &str, default_offset_min: i32) -> Option<i64> {
    let caps = ISO_TS.captures(text)?;
    let field = |name: &str| caps.name(name).map(|m| m.as_str());
    let frac_ms = match field("frac") {
        Some(frac) => {
            let mut value: u32 = frac.parse().ok()?;
            for _ in frac.len()..3 {
                value *= 10;
            }
            value
        }
        None => 0,
    };
    let offset_min = match field("off") {
        None => default_offset_min,
        Some("Z") => 0,
        Some(off) => {
            let sign = if off.starts_with('-') { -1 } else { 1 };
            let hours: i32 = off[1..3].parse().ok()?;
            let minutes: i32 = off[4..6].parse().ok()?;
            if minutes > 59 {
                return None;
            }
            let total = sign * (hours * 60 + minutes);
            if total.abs() > 18 * 60 {
                return None;
            }
            total
        }
    };
    civil_to_epoch_ms(
        (
            field("y")?.parse().ok()?,
            field("mo")?.parse().ok()?,
            field("d")?.parse().ok()?,
        ),
        (
            field("h")?.parse().ok()?,
            field("mi")?.parse().ok()?,
            field("s")?.parse().ok()?,
            frac_ms,
        ),
        offset_min,
    )
}

fn colon_to_epoch_ms(text: &str, offset_min: i32) -> Option<i64> {
    let caps = COLON_TS.captures(text)?;
    let year: i32 = caps["y"].parse().ok()?;
    let fields: Vec<u32> = ["mo", "d", "h", "mi", "s"]
        .iter()
        .map(|name| caps[*name].parse().ok())
        .collect::<Option<_>>()?;
    civil_to_epoch_ms(
        (year, fields[0], fields[1]),
        (fields[2], fields[3], fields[4], 0),
        offset_min,
    )
}

fn finite(text: &str) -> Option<f64> {
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn issue(source_id: &str, line_no: usize, raw: &str, reason: IssueReason) -> RawLineIssue {
    RawLineIssue {
        source_id: source_id.to_string(),
        line_no,
        raw: raw.to_string(),
        reason,
    }
}

fn rows_from(cells: BTreeMap<i64, Vec<Option<f64>>>) -> Vec<FrameRow> {
    cells
        .into_iter()
        .map(|(ts, cells)| FrameRow {
            ts: EpochMillis(ts),
            cells,
        })
        .collect()
}

/// Parse a GC log and pivot it into a six-column frame for the source JVM.
pub fn gc_frame(input: &str, opts: &ParseOptions) -> PipelineOutput {
    let mut issues = Vec::new();
    let mut cells: BTreeMap<i64, Vec<Option<f64>>> = BTreeMap::new();
    let mut any_event = false;

    for (line_no, line) in lines_of(input) {
        let trimmed = line.trim_end();
        let Some(caps) = GC_LINE.captures(trimmed) else {
            issues.push(issue(
                &opts.source_id,
                line_no,
                line,
                IssueReason::Malformed,
            ));
            continue;
        };
        let Some(ts) = iso_to_epoch_ms(&caps["ts"], opts.gc_zone_offset_min) else {
            issues.push(issue(
                &opts.source_id,
                line_no,
                line,
                IssueReason::BadTimestamp,
            ));
            continue;
        };
        let elapsed = finite(&caps["elapsed"]).filter(|v| *v >= 0.0);
        let before = DIGITS
            .is_match(&caps["before"])
            .then(|| caps["before"].parse::<i64>().ok())
            .flatten();
        let after = DIGITS
            .is_match(&caps["after"])
            .then(|| caps["after"].parse::<i64>().ok())
            .flatten();
        let heap = DIGITS
            .is_match(&caps["heap"])
            .then(|| caps["heap"].parse::<i64>().ok())
            .flatten();
        let pause = finite(&caps["pause"]).filter(|v| *v >= 0.0);
        let (Some(elapsed), Some(before), Some(after), Some(heap), Some(pause)) =
            (elapsed, before, after, heap, pause)
        else {
            issues.push(issue(
                &opts.source_id,
                line_no,
                line,
                IssueReason::BadNumber,
            ));
            continue;
        };
        let kind = if &caps["kind"] == "Full GC" { 1.0 } else { 0.0 };

        any_event = true;
        let row = cells
            .entry(ts)
            .or_insert_with(|| vec![None; GC_FIELDS.len()]);
        let values = [
            before as f64,
            after as f64,
            heap as f64,
            pause,
            kind,
            elapsed,
        ];
        for (slot, value) in row.iter_mut().zip(values) {
            *slot = Some(value);
        }
    }

    let columns = if any_event {
        GC_FIELDS
            .iter()
            .map(|f| format!("gc.{}.{f}", opts.source_id))
            .collect()
    } else {
        cells.clear();
        Vec::new()
    };
    let frame =
        TidyFrame::new(PIPELINE_TAG, columns, rows_from(cells)).expect("grammar frame is valid");
    PipelineOutput { frame, issues }
}

/// Parse a SAR export and pivot it into one column per (host, metric).
pub fn sar_frame(input: &str) -> Result<PipelineOutput, PipelineError> {
    let grammar = |msg: &str| PipelineError::Grammar(format!("sar header: {msg}"));
    let mut lines = lines_of(input);
    let (_, header) = lines.next().ok_or_else(|| grammar("missing"))?;
    let caps = SAR_HEADER
        .captures(header)
        .ok_or_else(|| grammar("must be hostname;interval;timestamp;<metrics>"))?;
    let metrics: Vec<&str> = caps.name("metrics").unwrap().as_str().split(';').collect();
    for (i, name) in metrics.iter().enumerate() {
        if name.is_empty() {
            return Err(grammar("empty metric column"));
        }
        if metrics[..i].contains(name) || ["hostname", "interval", "timestamp"].contains(name) {
            return Err(grammar(&format!("duplicate column {name:?}")));
        }
    }

    let mut issues = Vec::new();
    let mut hosts: Vec<String> = Vec::new();
    let mut cells: BTreeMap<i64, BTreeMap<usize, Vec<Option<f64>>>> = BTreeMap::new();

    for (line_no, line) in lines {
        let fields: Vec<&str> = line.split(';').collect();
        if fields.len() != metrics.len() + 3 || fields[0].is_empty() {
            issues.push(issue("sar", line_no, line, IssueReason::Malformed));
            continue;
        }
        if !DIGITS.is_match(fields[1]) || fields[1].parse::<u64>().map_or(true, |v| v == 0) {
            issues.push(issue("sar", line_no, line, IssueReason::BadNumber));
            continue;
        }
        if !SIGNED_DIGITS.is_match(fields[2]) {
            issues.push(issue("sar", line_no, line, IssueReason::BadTimestamp));
            continue;
        }
        let Ok(epoch_s) = fields[2].parse::<i64>() else {
            issues.push(issue("sar", line_no, line, IssueReason::BadTimestamp));
            continue;
        };
        let mut values = Vec::with_capacity(metrics.len());
        let mut bad = false;
        for field in &fields[3..] {
            if field.is_empty() {
                values.push(None);
            } else if let Some(v) = finite(field) {
                values.push(Some(v));
            } else {
                bad = true;
                break;
            }
        }
        if bad {
            issues.push(issue("sar", line_no, line, IssueReason::BadNumber));
            continue;
        }

        let host_idx = match hosts.iter().position(|h| h == fields[0]) {
            Some(i) => i,
            None => {
                hosts.push(fields[0].to_string());
                hosts.len() - 1
            }
        };
        cells
            .entry(epoch_s * 1000)
            .or_default()
            .insert(host_idx, values);
    }

    let columns: Vec<String> = hosts
        .iter()
        .flat_map(|h| metrics.iter().map(move |m| format!("sar.{h}.{m}")))
        .collect();
    let rows = cells
        .into_iter()
        .map(|(ts, per_host)| {
            let mut row = vec![None; columns.len()];
            for (host_idx, values) in per_host {
                let base = host_idx * metrics.len();
                row[base..base + values.len()].copy_from_slice(&values);
            }
            FrameRow {
                ts: EpochMillis(ts),
                cells: row,
            }
        })
        .collect();
    let frame = TidyFrame::new(PIPELINE_TAG, columns, rows).expect("grammar frame is valid");
    Ok(PipelineOutput { frame, issues })
}

/// Parse a client edge list and pivot it wide, counters in first-appearance
/// order, duplicates last-wins.
pub fn client_frame(input: &str, opts: &ParseOptions) -> PipelineOutput {
    let mut issues = Vec::new();
    let mut counters: Vec<String> = Vec::new();
    let mut records: Vec<(i64, usize, f64)> = Vec::new();

    for (line_no, line) in lines_of(input) {
        let Some(caps) = CLIENT_LINE.captures(line) else {
            issues.push(issue("client", line_no, line, IssueReason::Malformed));
            continue;
        };
        let counter = &caps["counter"];
        if counter.is_empty() {
            issues.push(issue("client", line_no, line, IssueReason::Malformed));
            continue;
        }
        let Some(ts) = colon_to_epoch_ms(&caps["ts"], opts.client_zone_offset_min) else {
            issues.push(issue("client", line_no, line, IssueReason::BadTimestamp));
            continue;
        };
        let Some(value) = finite(&caps["value"]) else {
            issues.push(issue("client", line_no, line, IssueReason::BadNumber));
            continue;
        };
        let col = match counters.iter().position(|c| c == counter) {
            Some(i) => i,
            None => {
                counters.push(counter.to_string());
                counters.len() - 1
            }
        };
        records.push((ts, col, value));
    }

    let columns: Vec<String> = counters.iter().map(|c| format!("client.{c}")).collect();
    let mut cells: BTreeMap<i64, Vec<Option<f64>>> = BTreeMap::new();
    for (ts, col, value) in records {
        cells.entry(ts).or_insert_with(|| vec![None; columns.len()])[col] = Some(value);
    }
    let frame =
        TidyFrame::new(PIPELINE_TAG, columns, rows_from(cells)).expect("grammar frame is valid");
    PipelineOutput { frame, issues }
}
