//! Hand-written parser for the canonical GC log grammar:
//!
//! ```text
//! <ISO-8601 datetime with offset>: <elapsed seconds>: [<"GC"|"Full GC"> <before>K-><after>K(<heap>K), <pause> secs]
//! ```

use crate::timebase::{to_epoch_ms, TimeFormat, TimeSpec};

use super::{
    content_lines, parse_digits_i64, parse_finite_f64, GcEvent, GcKind, IssueReason, RawLineIssue,
};

/// Parse a GC log. `default_zone_offset_min` applies when a line's timestamp
/// carries no zone of its own. Returns one event per well-formed line in
/// input order; every rejected line yields exactly one issue.
pub fn parse_gc(
    input: &str,
    source_id: &str,
    default_zone_offset_min: i32,
) -> (Vec<GcEvent>, Vec<RawLineIssue>) {
    let zone = TimeSpec {
        format: TimeFormat::Iso8601,
        zone_offset_min: default_zone_offset_min,
    };
    let mut events = Vec::new();
    let mut issues = Vec::new();
    for (line_no, line) in content_lines(input) {
        match parse_line(line, &zone, source_id) {
            Ok(event) => events.push(event),
            Err(reason) => issues.push(RawLineIssue {
                source_id: source_id.to_string(),
                line_no,
                raw: line.to_string(),
                reason,
            }),
        }
    }
    (events, issues)
}

fn parse_line(line: &str, zone: &TimeSpec, source_id: &str) -> Result<GcEvent, IssueReason> {
    let line = line.trim_end();
    let open = line.find('[').ok_or(IssueReason::Malformed)?;
    let body = line[open + 1..]
        .strip_suffix(']')
        .ok_or(IssueReason::Malformed)?;

    // Prefix is "<ts>: <elapsed>: "; the ISO timestamp contains ':' but
    // never ": ", so splitting on ": " is unambiguous.
    let prefix = line[..open]
        .strip_suffix(": ")
        .ok_or(IssueReason::Malformed)?;
    let (ts_text, elapsed_text) = prefix.rsplit_once(": ").ok_or(IssueReason::Malformed)?;

    let wall_clock_ms = to_epoch_ms(ts_text, zone).map_err(|_| IssueReason::BadTimestamp)?;
    let elapsed_s = parse_finite_f64(elapsed_text)
        .filter(|v| *v >= 0.0)
        .ok_or(IssueReason::BadNumber)?;

    let (kind, mem_text) = if let Some(rest) = body.strip_prefix("Full GC ") {
        (GcKind::Full, rest)
    } else if let Some(rest) = body.strip_prefix("GC ") {
        (GcKind::Minor, rest)
    } else {
        return Err(IssueReason::Malformed);
    };

    // "<before>K-><after>K(<heap>K), <pause> secs"
    let (before_text, rest) = mem_text.split_once("K->").ok_or(IssueReason::Malformed)?;
    let (after_text, rest) = rest.split_once("K(").ok_or(IssueReason::Malformed)?;
    let (heap_text, pause_part) = rest.split_once("K), ").ok_or(IssueReason::Malformed)?;
    let pause_text = pause_part
        .strip_suffix(" secs")
        .ok_or(IssueReason::Malformed)?;

    let mem_before_kb = parse_digits_i64(before_text).ok_or(IssueReason::BadNumber)?;
    let mem_after_kb = parse_digits_i64(after_text).ok_or(IssueReason::BadNumber)?;
    let heap_kb = parse_digits_i64(heap_text).ok_or(IssueReason::BadNumber)?;
    let pause_s = parse_finite_f64(pause_text)
        .filter(|v| *v >= 0.0)
        .ok_or(IssueReason::BadNumber)?;

    Ok(GcEvent {
        wall_clock_ms,
        elapsed_s,
        kind,
        mem_before_kb,
        mem_after_kb,
        heap_kb,
        pause_s,
        source_id: source_id.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timebase::EpochMillis;

    const MINOR: &str =
        "2015-07-21T10:15:03.123+00:00: 12.345: [GC 524288K->131072K(1048576K), 0.0456789 secs]";

    #[test]
    fn parses_minor_gc_line() {
        let (events, issues) = parse_gc(MINOR, "jvm1", 0);
        assert!(issues.is_empty());
        assert_eq!(
            events,
            vec![GcEvent {
                wall_clock_ms: EpochMillis(1_437_473_703_123),
                elapsed_s: 12.345,
                kind: GcKind::Minor,
                mem_before_kb: 524_288,
                mem_after_kb: 131_072,
                heap_kb: 1_048_576,
                pause_s: 0.045_678_9,
                source_id: "jvm1".to_string(),
            }]
        );
    }

    #[test]
    fn parses_full_gc_line() {
        let line = "2015-07-21T10:15:04.000+00:00: 13.000: [Full GC 912345K->401234K(1048576K), 1.2345678 secs]";
        let (events, issues) = parse_gc(line, "jvm1", 0);
        assert!(issues.is_empty());
        assert_eq!(events[0].kind, GcKind::Full);
        assert_eq!(events[0].mem_before_kb, 912_345);
    }

    #[test]
    fn garbage_line_is_one_malformed_issue() {
        let (events, issues) = parse_gc("garbage garbage", "jvm1", 0);
        assert!(events.is_empty());
        assert_eq!(issues.len(), 1);
        assert_eq!(issues[0].reason, IssueReason::Malformed);
        assert_eq!(issues[0].line_no, 1);
        assert_eq!(issues[0].raw, "garbage garbage");
    }

    #[test]
    fn issue_reasons_distinguish_field_failures() {
        let bad_ts =
            "2015-13-21T10:15:03.123+00:00: 12.3: [GC 524288K->131072K(1048576K), 0.04 secs]";
        let (_, issues) = parse_gc(bad_ts, "jvm1", 0);
        assert_eq!(issues[0].reason, IssueReason::BadTimestamp);

        let bad_mem =
            "2015-07-21T10:15:03.123+00:00: 12.3: [GC 5242x8K->131072K(1048576K), 0.04 secs]";
        let (_, issues) = parse_gc(bad_mem, "jvm1", 0);
        assert_eq!(issues[0].reason, IssueReason::BadNumber);

        let neg_pause =
            "2015-07-21T10:15:03.123+00:00: 12.3: [GC 524288K->131072K(1048576K), -0.04 secs]";
        let (_, issues) = parse_gc(neg_pause, "jvm1", 0);
        assert_eq!(issues[0].reason, IssueReason::BadNumber);
    }

    #[test]
    fn count_conservation_and_order() {
        let input = format!("# header comment\n{MINOR}\n\nnot a gc line\n{MINOR}\n");
        let (events, issues) = parse_gc(&input, "jvm1", 0);
        assert_eq!(events.len() + issues.len(), 3);
        assert_eq!(events.len(), 2);
        assert_eq!(issues[0].line_no, 4);

        // Idempotence: same bytes, same records.
        let again = parse_gc(&input, "jvm1", 0);
        assert_eq!(again.0, events);
        assert_eq!(again.1, issues);
    }

    #[test]
    fn zone_fallback_applies_only_without_suffix() {
        let bare = "2015-07-21T10:15:03.123: 12.3: [GC 1K->1K(2K), 0.01 secs]";
        let (events, _) = parse_gc(bare, "jvm1", 330);
        assert_eq!(
            events[0].wall_clock_ms,
            EpochMillis(1_437_473_703_123 - 330 * 60_000)
        );
    }
}
