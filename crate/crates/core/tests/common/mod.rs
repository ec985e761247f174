//! Shared helper for integration tests: the production parse -> pivot ->
//! merge chain over a synth output bundle.

use tidytel::ingest::{
    parse_client, parse_gc, parse_sar, ClientRecord, GcEvent, RawLineIssue, SarSample,
};
use tidytel::synth::{self, SynthOutput};
use tidytel::tidy::{merge, pivot_client, pivot_gc, pivot_sar, MergeStats, TidyFrame};

pub struct PipelineRun {
    pub merged: TidyFrame,
    pub stats: MergeStats,
    pub gc: Vec<GcEvent>,
    pub sar: Vec<SarSample>,
    pub client: Vec<ClientRecord>,
    pub issues: Vec<RawLineIssue>,
}

/// Parse every file of a synth bundle with pipeline A and merge the pivots.
pub fn run_pipeline(output: &SynthOutput) -> PipelineRun {
    let mut gc = Vec::new();
    let mut sar = Vec::new();
    let mut client = Vec::new();
    let mut issues = Vec::new();

    for (name, text) in &output.files {
        if name.starts_with("gc_") {
            let (events, file_issues) = parse_gc(text, synth::gc_source_id(name), 0);
            gc.extend(events);
            issues.extend(file_issues);
        } else if name.starts_with("sar_") {
            let (samples, file_issues) = parse_sar(text, name).expect("canonical sar header");
            sar.extend(samples);
            issues.extend(file_issues);
        } else if name == "client.csv" {
            let (records, file_issues) =
                parse_client(text, "client", output.config.client_zone_offset_min);
            client.extend(records);
            issues.extend(file_issues);
        }
    }

    let (gc_frame, _) = pivot_gc(&gc);
    let (sar_frame, _) = pivot_sar(&sar).expect("consistent metric sets");
    let (client_frame, _) = pivot_client(&client);
    let (merged, stats) = merge(&[gc_frame, sar_frame, client_frame]).expect("namespaced columns");

    PipelineRun {
        merged,
        stats,
        gc,
        sar,
        client,
        issues,
    }
}
