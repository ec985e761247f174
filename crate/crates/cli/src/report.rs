//! Report envelope: one JSON document tying every embedded report to the
//! exact input bytes it was computed from.
//!
//! Serialization is deterministic (struct field order, sorted maps, shortest
//! round-trip decimals), so two runs over identical inputs produce
//! byte-identical report files. The run timestamp honors the
//! `SOURCE_DATE_EPOCH` convention: when that variable is set, its value is
//! used instead of the wall clock, which keeps reports reproducible.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use tidytel::anomaly::AnomalyReport;
use tidytel::ingest::RawLineIssue;
use tidytel::profile::ProfileReport;
use tidytel::rules::RuleFinding;
use tidytel::tidy::MergeStats;
use tidytel::verify::{ComparisonReport, ExternalReport};

#[derive(Debug, Default, Serialize)]
pub struct ReportEnvelope {
    pub tool_version: String,
    pub generated_at_ms: Option<i64>,
    /// Content hash (SHA-256, hex) per input path.
    pub input_digests: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub parse_issues: Vec<RawLineIssue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub merge_stats: Option<MergeStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub findings: Vec<RuleFinding>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<(String, ComparisonReport)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub external: Option<ExternalReport>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub anomalies: Vec<AnomalyReport>,
}

impl ReportEnvelope {
    pub fn new() -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            generated_at_ms: run_timestamp_ms(),
            ..Self::default()
        }
    }

    pub fn add_digest(&mut self, path: &Path, bytes: &[u8]) {
        self.input_digests
            .insert(path.display().to_string(), sha256_hex(bytes));
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

fn run_timestamp_ms() -> Option<i64> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(epoch) => epoch.parse::<i64>().ok().map(|s| s * 1000),
        Err(_) => std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .ok()
            .map(|d| d.as_millis() as i64),
    }
}

/// Serialize the envelope as pretty JSON with a trailing newline.
pub fn emit_report(envelope: &ReportEnvelope, sink: &mut impl Write) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(envelope)?;
    writeln!(sink, "{text}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_matches_known_sha256() {
        // sha256("abc"), a published test vector.
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn minimal_envelope_is_valid_json() {
        let mut envelope = ReportEnvelope::new();
        envelope.generated_at_ms = Some(0);
        let mut buf = Vec::new();
        emit_report(&envelope, &mut buf).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(value["tool_version"], env!("CARGO_PKG_VERSION"));
        assert!(value.get("findings").is_none());
    }

    #[test]
    fn serialization_is_deterministic() {
        let mut a = ReportEnvelope::new();
        a.generated_at_ms = Some(1234);
        a.add_digest(Path::new("x.log"), b"content");
        let mut b = ReportEnvelope::new();
        b.generated_at_ms = Some(1234);
        b.add_digest(Path::new("x.log"), b"content");
        let render = |e: &ReportEnvelope| {
            let mut buf = Vec::new();
            emit_report(e, &mut buf).unwrap();
            buf
        };
        assert_eq!(render(&a), render(&b));
    }
}
