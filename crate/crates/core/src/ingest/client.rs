//! Hand-written parser for the canonical client edge list: comma-separated,
//! no header.
//!
//! ```text
//! 2015:07:21:10:15:05,server_time_ms,245.3
//! ```
//!
//! Client timestamps carry no zone, so callers must supply the client
//! machine's fixed offset. Duplicate (timestamp, counter) pairs are retained;
//! uniqueness is checked by the rule layer.

use crate::timebase::{to_epoch_ms, TimeFormat, TimeSpec};

use super::{content_lines, parse_finite_f64, ClientRecord, IssueReason, RawLineIssue};

pub fn parse_client(
    input: &str,
    source_id: &str,
    zone_offset_min: i32,
) -> (Vec<ClientRecord>, Vec<RawLineIssue>) {
    let zone = TimeSpec {
        format: TimeFormat::WorldClockColon,
        zone_offset_min,
    };
    let mut records = Vec::new();
    let mut issues = Vec::new();
    for (line_no, line) in content_lines(input) {
        match parse_line(line, &zone) {
            Ok(record) => records.push(record),
            Err(reason) => issues.push(RawLineIssue {
                source_id: source_id.to_string(),
                line_no,
                raw: line.to_string(),
                reason,
            }),
        }
    }
    (records, issues)
}

fn parse_line(line: &str, zone: &TimeSpec) -> Result<ClientRecord, IssueReason> {
    let mut fields = line.split(',');
    let (ts_text, counter, value_text) =
        match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(a), Some(b), Some(c), None) => (a, b, c),
            _ => return Err(IssueReason::Malformed),
        };
    if counter.is_empty() {
        return Err(IssueReason::Malformed);
    }
    let ts_ms = to_epoch_ms(ts_text, zone).map_err(|_| IssueReason::BadTimestamp)?;
    let value = parse_finite_f64(value_text).ok_or(IssueReason::BadNumber)?;
    Ok(ClientRecord {
        ts_ms,
        counter: counter.to_string(),
        value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timebase::EpochMillis;

    #[test]
    fn parses_edge_record() {
        let (records, issues) =
            parse_client("2015:07:21:10:15:05,server_time_ms,245.3", "client", 0);
        assert!(issues.is_empty());
        assert_eq!(
            records,
            vec![ClientRecord {
                ts_ms: EpochMillis(1_437_473_705_000),
                counter: "server_time_ms".to_string(),
                value: 245.3,
            }]
        );
    }

    #[test]
    fn zone_offset_shifts_the_instant() {
        let (records, _) = parse_client("2015:07:21:15:45:05,x,1.0", "client", 330);
        assert_eq!(records[0].ts_ms, EpochMillis(1_437_473_705_000));
    }

    #[test]
    fn duplicates_are_retained() {
        let input =
            "2015:07:21:10:15:05,server_time_ms,245.3\n2015:07:21:10:15:05,server_time_ms,245.3\n";
        let (records, issues) = parse_client(input, "client", 0);
        assert_eq!(records.len(), 2);
        assert!(issues.is_empty());
    }

    #[test]
    fn bad_lines_become_issues() {
        let input = "2015:07:21:10:15:61,c,1\nnot-a-time,c,1\nok,\n2015:07:21:10:15:05,c,abc\n2015:07:21:10:15:05,,1\n";
        let (records, issues) = parse_client(input, "client", 0);
        assert!(records.is_empty());
        assert_eq!(issues.len(), 5);
        assert_eq!(issues[0].reason, IssueReason::BadTimestamp);
        assert_eq!(issues[1].reason, IssueReason::BadTimestamp);
        assert_eq!(issues[2].reason, IssueReason::Malformed);
        assert_eq!(issues[3].reason, IssueReason::BadNumber);
        assert_eq!(issues[4].reason, IssueReason::Malformed);
    }

    #[test]
    fn five_second_cadence_in_clean_capture() {
        let input = "2015:07:21:10:15:00,c,1\n2015:07:21:10:15:05,c,2\n2015:07:21:10:15:10,c,3\n";
        let (records, _) = parse_client(input, "client", 0);
        let gaps: Vec<i64> = records
            .windows(2)
            .map(|w| w[1].ts_ms.0 - w[0].ts_ms.0)
            .collect();
        assert_eq!(gaps, vec![5000, 5000]);
    }
}
