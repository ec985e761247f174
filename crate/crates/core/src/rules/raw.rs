//! Raw-stage rules, applied to parsed records before any pivoting.
//!
//! Raw checks are source-dependent: duplicates are defined per
//! (timestamp, machine) for SAR and per (timestamp, counter) for the client
//! driver; cadence applies only to the fixed-interval sources (SAR by its
//! declared interval, client by configuration) and never to GC, whose event
//! times are legitimately irregular.

use std::collections::BTreeMap;

use crate::ingest::{ClientRecord, GcEvent, SarSample};
use crate::timebase::{cadence_check, EpochMillis};

use super::{finding, sort_findings, Rule, RuleFinding, RuleRegistry, R_CADENCE, R_DUP, R_MONO};

/// Apply all enabled raw-stage rules to one run's parsed records.
pub fn check_raw(
    gc: &[GcEvent],
    sar: &[SarSample],
    client: &[ClientRecord],
    registry: &RuleRegistry,
) -> Vec<RuleFinding> {
    let mut findings = Vec::new();

    if let Some(rule) = registry.active(R_DUP) {
        check_duplicates(rule, sar, client, &mut findings);
    }
    if let Some(rule) = registry.active(R_MONO) {
        check_monotonic(rule, gc, sar, client, &mut findings);
    }
    if let Some(rule) = registry.active(R_CADENCE) {
        check_cadence(rule, sar, client, &mut findings);
    }

    sort_findings(&mut findings);
    findings
}

fn check_duplicates(
    rule: &Rule,
    sar: &[SarSample],
    client: &[ClientRecord],
    findings: &mut Vec<RuleFinding>,
) {
    let mut client_counts: BTreeMap<(EpochMillis, &str), usize> = BTreeMap::new();
    for record in client {
        *client_counts
            .entry((record.ts_ms, record.counter.as_str()))
            .or_default() += 1;
    }
    for ((ts, counter), count) in client_counts {
        if count > 1 {
            findings.push(finding(
                rule,
                format!("client.{counter}"),
                Some(ts),
                None,
                count,
                format!("{count} client records share (timestamp {ts}, counter {counter:?})"),
            ));
        }
    }

    let mut sar_counts: BTreeMap<(EpochMillis, &str), usize> = BTreeMap::new();
    for sample in sar {
        *sar_counts
            .entry((sample.ts_ms, sample.hostname.as_str()))
            .or_default() += 1;
    }
    for ((ts, host), count) in sar_counts {
        if count > 1 {
            findings.push(finding(
                rule,
                format!("sar.{host}"),
                Some(ts),
                None,
                count,
                format!("{count} SAR samples share (timestamp {ts}, machine {host:?})"),
            ));
        }
    }
}

fn check_monotonic(
    rule: &Rule,
    gc: &[GcEvent],
    sar: &[SarSample],
    client: &[ClientRecord],
    findings: &mut Vec<RuleFinding>,
) {
    let mut sequences: Vec<(String, Vec<EpochMillis>)> = Vec::new();
    for event in gc {
        let scope = format!("gc.{}", event.source_id);
        match sequences.iter_mut().find(|(s, _)| *s == scope) {
            Some((_, ts)) => ts.push(event.wall_clock_ms),
            None => sequences.push((scope, vec![event.wall_clock_ms])),
        }
    }
    for sample in sar {
        let scope = format!("sar.{}", sample.hostname);
        match sequences.iter_mut().find(|(s, _)| *s == scope) {
            Some((_, ts)) => ts.push(sample.ts_ms),
            None => sequences.push((scope, vec![sample.ts_ms])),
        }
    }
    if !client.is_empty() {
        sequences.push((
            "client".to_string(),
            client.iter().map(|r| r.ts_ms).collect(),
        ));
    }

    for (scope, timestamps) in sequences {
        for (i, w) in timestamps.windows(2).enumerate() {
            if w[1] < w[0] {
                findings.push(finding(
                    rule,
                    scope.clone(),
                    Some(w[1]),
                    Some(i + 2),
                    w[1],
                    format!(
                        "timestamp {} at record {} precedes its predecessor {}",
                        w[1],
                        i + 2,
                        w[0]
                    ),
                ));
            }
        }
    }
}

fn check_cadence(
    rule: &Rule,
    sar: &[SarSample],
    client: &[ClientRecord],
    findings: &mut Vec<RuleFinding>,
) {
    let tolerance_ms = rule.num_param("tolerance_ms") as i64;

    let mut hosts: Vec<&str> = Vec::new();
    for sample in sar {
        if !hosts.contains(&sample.hostname.as_str()) {
            hosts.push(&sample.hostname);
        }
    }
    for host in hosts {
        let mut timestamps: Vec<EpochMillis> = sar
            .iter()
            .filter(|s| s.hostname == host)
            .map(|s| s.ts_ms)
            .collect();
        let declared_s = sar
            .iter()
            .find(|s| s.hostname == host)
            .map(|s| s.interval_s)
            .unwrap_or(0);
        timestamps.sort();
        timestamps.dedup();
        push_cadence(
            rule,
            &format!("sar.{host}"),
            &timestamps,
            declared_s as i64 * 1000,
            tolerance_ms,
            findings,
        );
    }

    if !client.is_empty() {
        let mut timestamps: Vec<EpochMillis> = client.iter().map(|r| r.ts_ms).collect();
        timestamps.sort();
        timestamps.dedup();
        let expected_ms = (rule.num_param("client_interval_s") * 1000.0).round() as i64;
        push_cadence(
            rule,
            "client",
            &timestamps,
            expected_ms,
            tolerance_ms,
            findings,
        );
    }
}

fn push_cadence(
    rule: &Rule,
    scope: &str,
    timestamps: &[EpochMillis],
    expected_ms: i64,
    tolerance_ms: i64,
    findings: &mut Vec<RuleFinding>,
) {
    if expected_ms <= 0 {
        return;
    }
    for deviation in cadence_check(timestamps, expected_ms, tolerance_ms) {
        findings.push(finding(
            rule,
            scope.to_string(),
            Some(timestamps[deviation.index]),
            Some(deviation.index),
            deviation.gap_ms,
            format!(
                "gap of {} ms before {} deviates from the declared {} ms interval",
                deviation.gap_ms, timestamps[deviation.index], expected_ms
            ),
        ));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::GcKind;

    fn client_record(ts: i64, counter: &str) -> ClientRecord {
        ClientRecord {
            ts_ms: EpochMillis(ts),
            counter: counter.to_string(),
            value: 1.0,
        }
    }

    fn sar_sample(ts: i64) -> SarSample {
        SarSample {
            ts_ms: EpochMillis(ts),
            hostname: "web01".to_string(),
            interval_s: 10,
            metrics: vec![("%user".to_string(), Some(10.0))],
        }
    }

    fn gc_event(ts: i64) -> GcEvent {
        GcEvent {
            wall_clock_ms: EpochMillis(ts),
            elapsed_s: 0.0,
            kind: GcKind::Minor,
            mem_before_kb: 10,
            mem_after_kb: 5,
            heap_kb: 20,
            pause_s: 0.1,
            source_id: "jvm1".to_string(),
        }
    }

    #[test]
    fn duplicate_client_pair_yields_one_finding() {
        let client = vec![
            client_record(1_437_473_705_000, "server_time_ms"),
            client_record(1_437_473_705_000, "server_time_ms"),
        ];
        let findings = check_raw(&[], &[], &client, &RuleRegistry::builtin());
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].rule_id, R_DUP);
        assert_eq!(findings[0].location.scope, "client.server_time_ms");
        assert_eq!(findings[0].location.ts_ms, Some(1_437_473_705_000));
        assert_eq!(findings[0].observed, "2");
    }

    #[test]
    fn same_timestamp_different_counter_is_fine() {
        let client = vec![client_record(5000, "a"), client_record(5000, "b")];
        let registry = RuleRegistry::builtin();
        let findings = check_raw(&[], &[], &client, &registry);
        assert!(findings.iter().all(|f| f.rule_id != R_DUP));
    }

    #[test]
    fn exact_sar_cadence_is_clean() {
        let sar: Vec<SarSample> = (0..5).map(|i| sar_sample(i * 10_000)).collect();
        let findings = check_raw(&[], &sar, &[], &RuleRegistry::builtin());
        assert!(findings.is_empty());
    }

    #[test]
    fn sar_gap_is_flagged() {
        let sar = vec![sar_sample(0), sar_sample(10_000), sar_sample(30_000)];
        let findings = check_raw(&[], &sar, &[], &RuleRegistry::builtin());
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].rule_id, R_CADENCE);
        assert_eq!(findings[0].location.index, Some(2));
        assert_eq!(findings[0].observed, "20000");
    }

    #[test]
    fn non_monotonic_gc_is_flagged_at_the_offender() {
        let gc = vec![gc_event(2000), gc_event(1000)];
        let findings = check_raw(&gc, &[], &[], &RuleRegistry::builtin());
        assert_eq!(findings.len(), 1);
        assert_eq!(findings[0].rule_id, R_MONO);
        assert_eq!(findings[0].location.scope, "gc.jvm1");
        assert_eq!(findings[0].location.index, Some(2));
    }

    #[test]
    fn client_cadence_uses_configured_interval() {
        let client = vec![
            client_record(0, "a"),
            client_record(5000, "a"),
            client_record(5000, "b"),
            client_record(10_000, "a"),
        ];
        assert!(check_raw(&[], &[], &client, &RuleRegistry::builtin()).is_empty());

        let registry = super::super::load_registry("R-CADENCE.client_interval_s = 2\n").unwrap();
        let findings = check_raw(&[], &[], &client, &registry);
        assert_eq!(findings.len(), 2);
        assert!(findings.iter().all(|f| f.rule_id == R_CADENCE));
    }

    #[test]
    fn disabled_rules_do_not_fire() {
        let client = vec![client_record(0, "a"), client_record(0, "a")];
        let registry = super::super::load_registry("R-DUP.enabled = false\n").unwrap();
        assert!(check_raw(&[], &[], &client, &registry).is_empty());
    }

    #[test]
    fn findings_are_deterministically_ordered() {
        let gc = vec![gc_event(5000), gc_event(1000)];
        let client = vec![
            client_record(0, "b"),
            client_record(0, "b"),
            client_record(0, "a"),
            client_record(0, "a"),
        ];
        let registry = RuleRegistry::builtin();
        let first = check_raw(&gc, &[], &client, &registry);
        let second = check_raw(&gc, &[], &client, &registry);
        assert_eq!(first, second);
        let ids: Vec<&str> = first.iter().map(|f| f.rule_id.as_str()).collect();
        assert_eq!(ids, vec![R_DUP, R_DUP, R_MONO]);
        assert!(first[0].location.scope < first[1].location.scope);
    }
}
