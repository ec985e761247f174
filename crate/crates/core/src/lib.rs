//! tidytel: telemetry munging and quality assessment.
//!
//! Transforms raw multi-source performance data (JVM GC logs, SAR system
//! samples, client-driver counter records) into one unified tidy
//! time-series matrix, and validates the transformation through layered
//! quality checks:
//!
//! 1. raw-data rules (duplicates, monotonicity, cadence),
//! 2. dual-pipeline processing consistency plus domain rules over the
//!    merged frame,
//! 3. posterior statistical screens (outliers, clustering, density).
//!
//! A deterministic synthetic-workload generator with a defect-injection
//! catalog provides known-output test cases for the whole chain.

pub mod anomaly;
pub mod ingest;
pub mod profile;
pub mod rules;
pub mod synth;
pub mod tidy;
pub mod timebase;
pub mod verify;

pub use ingest::{ClientRecord, GcEvent, GcKind, IssueReason, RawLineIssue, SarSample};
pub use tidy::{merge, FrameRow, MergeStats, TidyFrame};
pub use timebase::{EpochMillis, TimeFormat, TimeSpec};
