//! tidytel command line: telemetry munging and quality assessment.
//!
//! Subcommands mirror the pipeline stages: `parse`, `merge`, `profile`,
//! `check`, `verify`, `anomaly`, `synth`, and `pipeline` (the whole chain
//! over a source directory). Exit codes follow one contract everywhere:
//! 0 = clean, 1 = findings or inconsistencies present, 2 = fatal error
//! (I/O, format, config, usage). With `--lenient`, only Error-severity
//! findings and verdict failures cause exit 1.

mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use report::{emit_report, ReportEnvelope};
use tidytel::anomaly::{screen_frame, ScreenParams};
use tidytel::ingest::{
    parse_client, parse_gc, parse_sar, ClientRecord, GcEvent, RawLineIssue, SarSample,
};
use tidytel::profile::{profile_frame, ProfileReport};
use tidytel::rules::{check_frame, check_raw, load_registry, RuleFinding, RuleRegistry, Severity};
use tidytel::synth::{self, generate, inject, DefectSpec, SynthConfig};
use tidytel::tidy::{
    merge, pivot_client, pivot_gc, pivot_sar, read_frame_from_str, write_frame, MergeStats,
    TidyFrame,
};
use tidytel::verify::{
    compare_external, run_dual, ComparisonReport, ParseOptions, SourceKind as VerifySource, Verdict,
};

#[derive(Parser)]
#[command(
    name = "tidytel",
    version,
    about = "Telemetry munging and quality assessment"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Source {
    Gc,
    Sar,
    Client,
}

impl From<Source> for VerifySource {
    fn from(source: Source) -> Self {
        match source {
            Source::Gc => VerifySource::Gc,
            Source::Sar => VerifySource::Sar,
            Source::Client => VerifySource::Client,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse one raw source file and pivot it into a tidy frame.
    Parse(ParseArgs),
    /// Interlace-merge tidy frames into one unified matrix.
    Merge(MergeArgs),
    /// Compute per-metric profiling statistics for a tidy frame.
    Profile(ProfileArgs),
    /// Run quality rules over a source directory or a tidy frame file.
    Check(CheckArgs),
    /// Process one raw file through both independent pipelines and compare.
    Verify(VerifyArgs),
    /// Run statistical anomaly screens over a tidy frame.
    Anomaly(AnomalyArgs),
    /// Generate synthetic raw telemetry with ground truth.
    Synth(SynthArgs),
    /// Full chain over a source directory: parse, merge, profile, check,
    /// verify, anomaly, one report envelope.
    Pipeline(PipelineArgs),
}

#[derive(Args)]
struct ParseArgs {
    #[arg(long = "source")]
    source: Source,
    #[arg(long = "in")]
    input: PathBuf,
    /// Fixed zone offset (+HH:MM) for timestamps that carry none.
    #[arg(long = "tz", default_value = "+00:00")]
    tz: String,
    /// Tidy frame output path.
    #[arg(long = "out")]
    out: Option<PathBuf>,
    #[arg(long = "report")]
    report: Option<PathBuf>,
    #[arg(long = "lenient")]
    lenient: bool,
}

#[derive(Args)]
struct MergeArgs {
    /// Tidy frame files, merged in the given order.
    #[arg(long = "in", num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    #[arg(long = "out")]
    out: Option<PathBuf>,
    #[arg(long = "report")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ProfileArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "report")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// A synth-layout source directory, or a tidy frame file (frame-stage
    /// rules only).
    #[arg(long = "in")]
    input: PathBuf,
    /// Rule config file (`<id>.<param> = <value>` lines).
    #[arg(long = "rules")]
    rules: Option<PathBuf>,
    #[arg(long = "tz", default_value = "+00:00")]
    tz: String,
    #[arg(long = "report")]
    report: Option<PathBuf>,
    #[arg(long = "lenient")]
    lenient: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long = "source")]
    source: Source,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "tz", default_value = "+00:00")]
    tz: String,
    /// External tidy dataset to compare against both pipelines.
    #[arg(long = "external")]
    external: Option<PathBuf>,
    /// Cell tolerance for the external comparison (pipelines A/B always
    /// compare bit-exactly).
    #[arg(long = "tolerance", default_value_t = 0.0)]
    tolerance: f64,
    #[arg(long = "report")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct AnomalyArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "seed", default_value_t = 42)]
    seed: u64,
    #[arg(long = "zscore-k", default_value_t = 4.0)]
    zscore_k: f64,
    #[arg(long = "iqr-multiplier", default_value_t = 1.5)]
    iqr_multiplier: f64,
    #[arg(long = "density-min-fraction", default_value_t = 0.005)]
    density_min_fraction: f64,
    #[arg(long = "kmeans-k", default_value_t = 4)]
    kmeans_k: usize,
    #[arg(long = "report")]
    report: Option<PathBuf>,
    #[arg(long = "lenient")]
    lenient: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long = "out")]
    out: PathBuf,
    #[arg(long = "seed", default_value_t = 42)]
    seed: u64,
    /// Comma-separated defect ids to inject (e.g. cpu-over-100,tz-shift).
    #[arg(long = "defects", value_delimiter = ',')]
    defects: Vec<String>,
    #[arg(long = "duration", default_value_t = 300)]
    duration_s: u64,
    #[arg(long = "jvms", default_value_t = 3)]
    jvm_count: usize,
    /// Client machine zone offset (+HH:MM).
    #[arg(long = "tz", default_value = "+00:00")]
    tz: String,
}

#[derive(Args)]
struct PipelineArgs {
    /// Source directory: gc_*.log, sar_*.dat, client.csv.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long = "tz", default_value = "+00:00")]
    tz: String,
    #[arg(long = "rules")]
    rules: Option<PathBuf>,
    /// Where to write the merged tidy frame.
    #[arg(long = "out")]
    out: Option<PathBuf>,
    #[arg(long = "report")]
    report: Option<PathBuf>,
    /// External tidy dataset to compare against both merged pipelines.
    #[arg(long = "external")]
    external: Option<PathBuf>,
    #[arg(long = "seed", default_value_t = 42)]
    seed: u64,
    #[arg(long = "lenient")]
    lenient: bool,
}

/// Severity tally driving the exit-code contract.
#[derive(Debug, Default)]
struct Tally {
    warnings: usize,
    errors: usize,
}

impl Tally {
    fn add_findings(&mut self, findings: &[RuleFinding]) {
        for finding in findings {
            match finding.severity {
                Severity::Warning => self.warnings += 1,
                Severity::Error => self.errors += 1,
            }
        }
    }

    fn add_issues(&mut self, issues: &[RawLineIssue]) {
        self.warnings += issues.len();
    }

    fn add_verdict(&mut self, verdict: &Verdict) {
        if *verdict == Verdict::Inconsistent {
            self.errors += 1;
        }
    }

    fn exit_code(&self, lenient: bool) -> i32 {
        if self.errors > 0 || (self.warnings > 0 && !lenient) {
            1
        } else {
            0
        }
    }
}

fn main() {
    // Die quietly on SIGPIPE so `tidytel ... | head` behaves like other
    // stream tools instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error:#}");
            2
        }
    };
    std::process::exit(code);
}

fn run(command: Command) -> Result<i32> {
    match command {
        Command::Parse(args) => cmd_parse(args),
        Command::Merge(args) => cmd_merge(args),
        Command::Profile(args) => cmd_profile(args),
        Command::Check(args) => cmd_check(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Anomaly(args) => cmd_anomaly(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Pipeline(args) => cmd_pipeline(args),
    }
}

/// `+HH:MM` / `-HH:MM` to signed minutes.
fn parse_tz(text: &str) -> Result<i32> {
    let (sign, rest) = match text.as_bytes().first() {
        Some(b'+') => (1, &text[1..]),
        Some(b'-') => (-1, &text[1..]),
        _ => bail!("zone offset must look like +HH:MM, got {text:?}"),
    };
    let (h, m) = rest
        .split_once(':')
        .with_context(|| format!("zone offset must look like +HH:MM, got {text:?}"))?;
    let hours: i32 = h
        .parse()
        .with_context(|| format!("bad offset hours {h:?}"))?;
    let minutes: i32 = m
        .parse()
        .with_context(|| format!("bad offset minutes {m:?}"))?;
    if !(0..=59).contains(&minutes) || !(0..=18).contains(&hours) {
        bail!("zone offset {text} out of range");
    }
    Ok(sign * (hours * 60 + minutes))
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_rules(path: Option<&Path>) -> Result<RuleRegistry> {
    match path {
        Some(path) => {
            let text = read_input(path)?;
            load_registry(&text).with_context(|| format!("bad rule config {}", path.display()))
        }
        None => Ok(RuleRegistry::builtin()),
    }
}

fn write_frame_file(frame: &TidyFrame, path: &Path) -> Result<()> {
    let file =
        fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut sink = std::io::BufWriter::new(file);
    write_frame(frame, &mut sink).with_context(|| format!("cannot write {}", path.display()))?;
    sink.into_inner()
        .map(drop)
        .with_context(|| format!("cannot flush {}", path.display()))
}

fn write_envelope(envelope: &ReportEnvelope, path: Option<&Path>) -> Result<()> {
    if let Some(path) = path {
        let mut file =
            fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        emit_report(envelope, &mut file)?;
    }
    Ok(())
}

fn stamped_profile(frame: &TidyFrame) -> ProfileReport {
    let mut report = profile_frame(frame);
    report.generated_at_ms = ReportEnvelope::new().generated_at_ms;
    report
}

/// Raw sources discovered in a synth-layout directory.
struct SourceDir {
    /// (file name, text, source id) in sorted file order.
    gc: Vec<(String, String, String)>,
    sar: Vec<(String, String)>,
    client: Option<(String, String)>,
    dir: PathBuf,
}

impl SourceDir {
    fn load(dir: &Path) -> Result<Self> {
        let mut names: Vec<String> = fs::read_dir(dir)
            .with_context(|| format!("cannot read directory {}", dir.display()))?
            .filter_map(|entry| entry.ok())
            .filter(|entry| entry.path().is_file())
            .map(|entry| entry.file_name().to_string_lossy().into_owned())
            .collect();
        names.sort();

        let mut sources = SourceDir {
            gc: Vec::new(),
            sar: Vec::new(),
            client: None,
            dir: dir.to_path_buf(),
        };
        for name in names {
            let path = dir.join(&name);
            if name.starts_with("gc_") && name.ends_with(".log") {
                let text = read_input(&path)?;
                let id = synth::gc_source_id(&name).to_string();
                sources.gc.push((name, text, id));
            } else if name.starts_with("sar_") && name.ends_with(".dat") {
                let text = read_input(&path)?;
                sources.sar.push((name, text));
            } else if name == "client.csv" {
                sources.client = Some((name, read_input(&path)?));
            }
        }
        if sources.gc.is_empty() && sources.sar.is_empty() && sources.client.is_none() {
            bail!(
                "no raw sources (gc_*.log, sar_*.dat, client.csv) in {}",
                dir.display()
            );
        }
        Ok(sources)
    }

    fn add_digests(&self, envelope: &mut ReportEnvelope) {
        for (name, text, _) in &self.gc {
            envelope.add_digest(&self.dir.join(name), text.as_bytes());
        }
        for (name, text) in &self.sar {
            envelope.add_digest(&self.dir.join(name), text.as_bytes());
        }
        if let Some((name, text)) = &self.client {
            envelope.add_digest(&self.dir.join(name), text.as_bytes());
        }
    }
}

/// Parsed records plus per-line issues for one directory.
struct ParsedSources {
    gc: Vec<GcEvent>,
    sar: Vec<SarSample>,
    client: Vec<ClientRecord>,
    issues: Vec<RawLineIssue>,
}

fn parse_sources(sources: &SourceDir, tz_min: i32) -> Result<ParsedSources> {
    let mut parsed = ParsedSources {
        gc: Vec::new(),
        sar: Vec::new(),
        client: Vec::new(),
        issues: Vec::new(),
    };
    for (_, text, id) in &sources.gc {
        let (events, issues) = parse_gc(text, id, tz_min);
        parsed.gc.extend(events);
        parsed.issues.extend(issues);
    }
    for (name, text) in &sources.sar {
        let (samples, issues) =
            parse_sar(text, name).with_context(|| format!("fatal SAR format error in {name}"))?;
        parsed.sar.extend(samples);
        parsed.issues.extend(issues);
    }
    if let Some((_, text)) = &sources.client {
        let (records, issues) = parse_client(text, "client", tz_min);
        parsed.client.extend(records);
        parsed.issues.extend(issues);
    }
    Ok(parsed)
}

fn merge_parsed(parsed: &ParsedSources) -> Result<(TidyFrame, MergeStats)> {
    let (gc_frame, _) = pivot_gc(&parsed.gc);
    let (sar_frame, _) = pivot_sar(&parsed.sar).context("conflicting SAR metric sets")?;
    let (client_frame, _) = pivot_client(&parsed.client);
    merge(&[gc_frame, sar_frame, client_frame]).context("column namespace collision")
}

fn cmd_parse(args: ParseArgs) -> Result<i32> {
    let tz = parse_tz(&args.tz)?;
    let text = read_input(&args.input)?;
    let file_name = args
        .input
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();

    let mut envelope = ReportEnvelope::new();
    envelope.add_digest(&args.input, text.as_bytes());

    let (frame, issues) = match args.source {
        Source::Gc => {
            let (events, issues) = parse_gc(&text, synth::gc_source_id(&file_name), tz);
            let (frame, _) = pivot_gc(&events);
            (frame, issues)
        }
        Source::Sar => {
            let (samples, issues) =
                parse_sar(&text, &file_name).context("fatal SAR format error")?;
            let (frame, _) = pivot_sar(&samples).context("conflicting SAR metric sets")?;
            (frame, issues)
        }
        Source::Client => {
            let (records, issues) = parse_client(&text, "client", tz);
            let (frame, _) = pivot_client(&records);
            (frame, issues)
        }
    };

    println!(
        "parsed {}: {} rows x {} columns, {} issue(s)",
        args.input.display(),
        frame.n_rows(),
        frame.n_cols(),
        issues.len()
    );
    for issue in &issues {
        println!(
            "  line {}: {:?} {}",
            issue.line_no,
            issue.reason,
            truncate(&issue.raw, 60)
        );
    }
    if let Some(out) = &args.out {
        write_frame_file(&frame, out)?;
        println!("wrote tidy frame to {}", out.display());
    }

    let mut tally = Tally::default();
    tally.add_issues(&issues);
    envelope.parse_issues = issues;
    write_envelope(&envelope, args.report.as_deref())?;
    Ok(tally.exit_code(args.lenient))
}

fn cmd_merge(args: MergeArgs) -> Result<i32> {
    let mut envelope = ReportEnvelope::new();
    let mut frames = Vec::new();
    for path in &args.input {
        let text = read_input(path)?;
        envelope.add_digest(path, text.as_bytes());
        frames.push(
            read_frame_from_str(&text, &path.display().to_string())
                .with_context(|| format!("bad tidy file {}", path.display()))?,
        );
    }
    let (merged, stats) = merge(&frames).context("cannot merge frames")?;
    println!(
        "merged {} frames: {} rows x {} columns, {} interlace-missing cells",
        stats.inputs.len(),
        stats.rows,
        stats.cols,
        stats.artificial_missing
    );
    if let Some(out) = &args.out {
        write_frame_file(&merged, out)?;
        println!("wrote merged frame to {}", out.display());
    }
    envelope.merge_stats = Some(stats);
    write_envelope(&envelope, args.report.as_deref())?;
    Ok(0)
}

fn cmd_profile(args: ProfileArgs) -> Result<i32> {
    let text = read_input(&args.input)?;
    let frame = read_frame_from_str(&text, "frame")
        .with_context(|| format!("bad tidy file {}", args.input.display()))?;
    let report = stamped_profile(&frame);
    println!("profiled {} columns over {} rows", report.cols, report.rows);
    let mut envelope = ReportEnvelope::new();
    envelope.add_digest(&args.input, text.as_bytes());
    envelope.profile = Some(report);
    match args.report.as_deref() {
        Some(_) => write_envelope(&envelope, args.report.as_deref())?,
        None => emit_report(&envelope, &mut std::io::stdout())?,
    }
    Ok(0)
}

fn cmd_check(args: CheckArgs) -> Result<i32> {
    let registry = load_rules(args.rules.as_deref())?;
    let tz = parse_tz(&args.tz)?;
    let mut envelope = ReportEnvelope::new();
    let mut tally = Tally::default();

    let findings = if args.input.is_dir() {
        let sources = SourceDir::load(&args.input)?;
        sources.add_digests(&mut envelope);
        let parsed = parse_sources(&sources, tz)?;
        let (merged, stats) = merge_parsed(&parsed)?;
        let profile = stamped_profile(&merged);

        let mut findings = check_raw(&parsed.gc, &parsed.sar, &parsed.client, &registry);
        findings.extend(check_frame(&merged, &profile, &registry));
        tally.add_issues(&parsed.issues);
        envelope.parse_issues = parsed.issues;
        envelope.merge_stats = Some(stats);
        envelope.profile = Some(profile);
        findings
    } else {
        let text = read_input(&args.input)?;
        envelope.add_digest(&args.input, text.as_bytes());
        let frame = read_frame_from_str(&text, "frame")
            .with_context(|| format!("bad tidy file {}", args.input.display()))?;
        let profile = stamped_profile(&frame);
        let findings = check_frame(&frame, &profile, &registry);
        envelope.profile = Some(profile);
        findings
    };

    print_findings(&findings);
    if !envelope.parse_issues.is_empty() {
        println!("parse issues: {}", envelope.parse_issues.len());
    }
    tally.add_findings(&findings);
    envelope.findings = findings;
    write_envelope(&envelope, args.report.as_deref())?;
    Ok(tally.exit_code(args.lenient))
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let tz = parse_tz(&args.tz)?;
    let text = read_input(&args.input)?;
    let file_name = args
        .input
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let opts = ParseOptions {
        source_id: synth::gc_source_id(&file_name).to_string(),
        gc_zone_offset_min: tz,
        client_zone_offset_min: tz,
    };

    let mut envelope = ReportEnvelope::new();
    envelope.add_digest(&args.input, text.as_bytes());
    let mut tally = Tally::default();

    let run = run_dual(args.source.into(), &text, &opts);
    let report = run.report(0.0);
    println!(
        "dual-pipeline verdict for {}: {:?}",
        args.input.display(),
        report.verdict
    );
    print_comparison(&report);
    tally.add_verdict(&report.verdict);

    if let Some(external_path) = &args.external {
        let external_text = read_input(external_path)?;
        envelope.add_digest(external_path, external_text.as_bytes());
        match (&run.a, &run.b) {
            (Ok(a), Ok(b)) => {
                let external = compare_external(&a.frame, &b.frame, &external_text, args.tolerance)
                    .with_context(|| format!("bad external file {}", external_path.display()))?;
                println!(
                    "external comparison: overall {:?} (vs A: {:?}, vs B: {:?})",
                    external.verdict, external.against_a.verdict, external.against_b.verdict
                );
                tally.add_verdict(&external.verdict);
                envelope.external = Some(external);
            }
            _ => bail!("cannot compare external dataset: a pipeline failed fatally"),
        }
    }

    envelope
        .comparisons
        .push((format!("{file_name} (A vs B)"), report));
    write_envelope(&envelope, args.report.as_deref())?;
    Ok(tally.exit_code(false))
}

fn cmd_anomaly(args: AnomalyArgs) -> Result<i32> {
    let text = read_input(&args.input)?;
    let frame = read_frame_from_str(&text, "frame")
        .with_context(|| format!("bad tidy file {}", args.input.display()))?;
    if !(args.density_min_fraction > 0.0 && args.density_min_fraction < 1.0) {
        bail!("--density-min-fraction must lie in (0, 1)");
    }
    let params = ScreenParams {
        zscore_k: args.zscore_k,
        iqr_multiplier: args.iqr_multiplier,
        density_min_fraction: args.density_min_fraction,
        kmeans_k: args.kmeans_k,
        seed: args.seed,
        skip_categorical: true,
    };
    let reports = screen_frame(&frame, &params);

    let mut tally = Tally::default();
    for report in &reports {
        println!(
            "{:?}: {} flag(s){}",
            report.method,
            report.flags.len(),
            if report.notices.is_empty() {
                String::new()
            } else {
                format!(" ({})", report.notices.join("; "))
            }
        );
        for flag in &report.flags {
            println!("  {} at {}: {}", flag.column, flag.ts_epoch_ms, flag.detail);
        }
        tally.warnings += report.flags.len();
    }

    let mut envelope = ReportEnvelope::new();
    envelope.add_digest(&args.input, text.as_bytes());
    envelope.anomalies = reports;
    write_envelope(&envelope, args.report.as_deref())?;
    Ok(tally.exit_code(args.lenient))
}

fn cmd_synth(args: SynthArgs) -> Result<i32> {
    let config = SynthConfig {
        duration_s: args.duration_s,
        jvm_count: args.jvm_count,
        client_zone_offset_min: parse_tz(&args.tz)?,
        ..SynthConfig::default()
    };
    let mut output = generate(&config, args.seed).context("invalid synth config")?;
    for id in &args.defects {
        let spec: DefectSpec = id
            .parse()
            .map_err(|e: String| anyhow::anyhow!(e))
            .context("bad --defects list")?;
        output = inject(&spec, &output, args.seed).context("defect injection failed")?;
    }
    synth::write_to_dir(&output, &args.out)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    println!(
        "generated {} files (seed {}, {} defect(s)) in {}",
        output.files.len(),
        args.seed,
        output.defects.len(),
        args.out.display()
    );
    Ok(0)
}

fn cmd_pipeline(args: PipelineArgs) -> Result<i32> {
    let tz = parse_tz(&args.tz)?;
    let registry = load_rules(args.rules.as_deref())?;
    let sources = SourceDir::load(&args.input)?;

    let mut envelope = ReportEnvelope::new();
    sources.add_digests(&mut envelope);
    let mut tally = Tally::default();

    // Stage 1: parse (pipeline A) plus dual-pipeline verification per file.
    let parsed = parse_sources(&sources, tz)?;
    let mut b_frames: Vec<TidyFrame> = Vec::new();
    let mut file_kinds: Vec<(String, String, VerifySource)> = Vec::new();
    for (name, _, id) in &sources.gc {
        file_kinds.push((name.clone(), id.clone(), VerifySource::Gc));
    }
    for (name, _) in &sources.sar {
        file_kinds.push((name.clone(), "sar".to_string(), VerifySource::Sar));
    }
    if let Some((name, _)) = &sources.client {
        file_kinds.push((name.clone(), "client".to_string(), VerifySource::Client));
    }

    let texts: BTreeMap<&str, &str> = sources
        .gc
        .iter()
        .map(|(n, t, _)| (n.as_str(), t.as_str()))
        .chain(sources.sar.iter().map(|(n, t)| (n.as_str(), t.as_str())))
        .chain(sources.client.iter().map(|(n, t)| (n.as_str(), t.as_str())))
        .collect();
    for (name, id, kind) in &file_kinds {
        let opts = ParseOptions {
            source_id: id.clone(),
            gc_zone_offset_min: tz,
            client_zone_offset_min: tz,
        };
        let run = run_dual(*kind, texts[name.as_str()], &opts);
        let report = run.report(0.0);
        tally.add_verdict(&report.verdict);
        if report.verdict == Verdict::Inconsistent {
            println!("dual-pipeline INCONSISTENT on {name}");
        }
        if let Ok(b) = run.b {
            b_frames.push(b.frame);
        }
        envelope
            .comparisons
            .push((format!("{name} (A vs B)"), report));
    }

    // Stage 2: pivot and merge.
    let (merged, stats) = merge_parsed(&parsed)?;
    println!(
        "merged frame: {} rows x {} columns ({} interlace-missing cells)",
        stats.rows, stats.cols, stats.artificial_missing
    );
    if let Some(out) = &args.out {
        write_frame_file(&merged, out)?;
        println!("wrote merged frame to {}", out.display());
    }

    // Stage 3: profile.
    let profile = stamped_profile(&merged);

    // Stage 4: rules, raw stage then frame stage.
    let mut findings = check_raw(&parsed.gc, &parsed.sar, &parsed.client, &registry);
    findings.extend(check_frame(&merged, &profile, &registry));
    print_findings(&findings);
    if !parsed.issues.is_empty() {
        println!("parse issues: {}", parsed.issues.len());
    }
    tally.add_findings(&findings);
    tally.add_issues(&parsed.issues);

    // Stage 5: external dataset comparison against both merged pipelines.
    if let Some(external_path) = &args.external {
        let external_text = read_input(external_path)?;
        envelope.add_digest(external_path, external_text.as_bytes());
        let merged_b = merge(&b_frames).context("pipeline B merge failed")?.0;
        let external = compare_external(&merged, &merged_b, &external_text, 0.0)
            .with_context(|| format!("bad external file {}", external_path.display()))?;
        println!(
            "external comparison: overall {:?} (vs A: {:?}, vs B: {:?})",
            external.verdict, external.against_a.verdict, external.against_b.verdict
        );
        tally.add_verdict(&external.verdict);
        envelope.external = Some(external);
    }

    // Stage 6: anomaly screens.
    let screens = screen_frame(
        &merged,
        &ScreenParams {
            seed: args.seed,
            ..ScreenParams::default()
        },
    );
    for report in &screens {
        if !report.flags.is_empty() {
            println!(
                "{:?}: {} anomaly flag(s)",
                report.method,
                report.flags.len()
            );
        }
        tally.warnings += report.flags.len();
    }

    envelope.parse_issues = parsed.issues;
    envelope.merge_stats = Some(stats);
    envelope.profile = Some(profile);
    envelope.findings = findings;
    envelope.anomalies = screens;
    write_envelope(&envelope, args.report.as_deref())?;

    let code = tally.exit_code(args.lenient);
    println!(
        "pipeline result: {} warning(s), {} error(s) -> exit {code}",
        tally.warnings, tally.errors
    );
    Ok(code)
}

fn print_findings(findings: &[RuleFinding]) {
    println!("findings: {}", findings.len());
    for finding in findings {
        let ts = finding
            .location
            .ts_ms
            .map(|t| format!(" at {t}"))
            .unwrap_or_default();
        println!(
            "  [{:?}] {} on {}{}: {}",
            finding.severity, finding.rule_id, finding.location.scope, ts, finding.message
        );
    }
}

fn print_comparison(report: &ComparisonReport) {
    if !report.schema_diffs.is_empty() {
        println!("  schema diffs: {}", report.schema_diffs.len());
    }
    if report.row_diff_count > 0 {
        println!("  row diffs: {}", report.row_diff_count);
    }
    if report.cell_diff_count > 0 {
        println!("  cell diffs: {}", report.cell_diff_count);
    }
    for (id, message) in &report.pipeline_failures {
        println!("  pipeline {id:?} failed: {message}");
    }
}

fn truncate(text: &str, max: usize) -> &str {
    match text.char_indices().nth(max) {
        Some((idx, _)) => &text[..idx],
        None => text,
    }
}
