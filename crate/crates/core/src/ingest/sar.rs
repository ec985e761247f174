//! Hand-written parser for the canonical SAR export: semicolon-separated,
//! header first.
//!
//! ```text
//! hostname;interval;timestamp;<metric1>;<metric2>;...
//! web01;10;1437473703;12.50;83.80
//! ```
//!
//! Timestamps are epoch seconds. An empty metric field means the metric was
//! not sampled in that row and becomes a missing value downstream.

use std::collections::HashSet;

use thiserror::Error;

use crate::timebase::seconds_to_ms;

use super::{
    content_lines, parse_digits_i64, parse_finite_f64, IssueReason, RawLineIssue, SarSample,
};

/// Fatal header problems: bad rows are per-line issues, a bad header is not
/// recoverable because every row depends on it.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum SarFormatError {
    #[error("missing header line")]
    MissingHeader,
    #[error("header must start with hostname;interval;timestamp, got {0:?}")]
    BadFixedColumns(String),
    #[error("header declares no metric columns")]
    NoMetrics,
    #[error("duplicate header column {0:?}")]
    DuplicateColumn(String),
}

/// Parse a SAR export. The first non-comment line must be the header.
pub fn parse_sar(
    input: &str,
    source_id: &str,
) -> Result<(Vec<SarSample>, Vec<RawLineIssue>), SarFormatError> {
    let mut lines = content_lines(input);
    let (_, header) = lines.next().ok_or(SarFormatError::MissingHeader)?;
    let metric_names = parse_header(header)?;

    let mut samples = Vec::new();
    let mut issues = Vec::new();
    for (line_no, line) in lines {
        match parse_row(line, &metric_names) {
            Ok(sample) => samples.push(sample),
            Err(reason) => issues.push(RawLineIssue {
                source_id: source_id.to_string(),
                line_no,
                raw: line.to_string(),
                reason,
            }),
        }
    }
    Ok((samples, issues))
}

fn parse_header(header: &str) -> Result<Vec<String>, SarFormatError> {
    let fields: Vec<&str> = header.split(';').collect();
    if fields.len() < 3
        || fields[0] != "hostname"
        || fields[1] != "interval"
        || fields[2] != "timestamp"
    {
        return Err(SarFormatError::BadFixedColumns(header.to_string()));
    }
    if fields.len() == 3 {
        return Err(SarFormatError::NoMetrics);
    }
    let mut seen = HashSet::new();
    for name in &fields {
        if name.is_empty() {
            return Err(SarFormatError::BadFixedColumns(header.to_string()));
        }
        if !seen.insert(*name) {
            return Err(SarFormatError::DuplicateColumn(name.to_string()));
        }
    }
    Ok(fields[3..].iter().map(|s| s.to_string()).collect())
}

fn parse_row(line: &str, metric_names: &[String]) -> Result<SarSample, IssueReason> {
    let fields: Vec<&str> = line.split(';').collect();
    if fields.len() != metric_names.len() + 3 {
        return Err(IssueReason::Malformed);
    }
    let hostname = fields[0];
    if hostname.is_empty() {
        return Err(IssueReason::Malformed);
    }
    let interval_s = parse_digits_i64(fields[1])
        .filter(|v| *v > 0)
        .ok_or(IssueReason::BadNumber)? as u64;
    let epoch_s: i64 = {
        let t = fields[2];
        let digits = t.strip_prefix('-').unwrap_or(t);
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(IssueReason::BadTimestamp);
        }
        t.parse().map_err(|_| IssueReason::BadTimestamp)?
    };

    let mut metrics = Vec::with_capacity(metric_names.len());
    for (name, field) in metric_names.iter().zip(&fields[3..]) {
        let value = if field.is_empty() {
            None
        } else {
            Some(parse_finite_f64(field).ok_or(IssueReason::BadNumber)?)
        };
        metrics.push((name.clone(), value));
    }

    Ok(SarSample {
        ts_ms: seconds_to_ms(epoch_s),
        hostname: hostname.to_string(),
        interval_s,
        metrics,
    })
}
