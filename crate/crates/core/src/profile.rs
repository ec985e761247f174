//! Per-metric profiling statistics over a tidy frame: mean, median, minimum,
//! maximum, range, missing count, and percentile ranks.
//!
//! Statistics are computed over present values only; missing counts are a
//! separate statistic. An all-missing series has every statistic undefined
//! (serialized as `null`, never 0). The percentile rank of the i-th order
//! statistic uses the midpoint convention `p_i = 100 * (i - 0.5) / T'` over
//! the `T'` present values.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::tidy::TidyFrame;
use crate::timebase::EpochMillis;

/// One frame column's values, aligned to the frame's row timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub name: String,
    pub timestamps: Vec<EpochMillis>,
    pub values: Vec<Option<f64>>,
}

impl MetricSeries {
    pub fn from_frame(frame: &TidyFrame, col: usize) -> Self {
        Self {
            name: frame.columns()[col].clone(),
            timestamps: frame.timestamps().collect(),
            values: frame.column_values(col),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Present values in row order.
    pub fn present(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    /// Present values ascending.
    pub fn sorted_present(&self) -> Vec<f64> {
        let mut v = self.present();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Profiling statistics for one metric. `None` means undefined: the series
/// had no present values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricProfile {
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub range: Option<f64>,
    pub missing_count: usize,
    /// `(i, p_i)` for each order statistic of the present values.
    pub percentile_ranks: Vec<(usize, f64)>,
}

/// Profiles for every column of a frame, plus the frame dimensions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileReport {
    pub rows: usize,
    pub cols: usize,
    /// Stamped by the caller; left unset by pure computation.
    pub generated_at_ms: Option<i64>,
    pub profiles: BTreeMap<String, MetricProfile>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("quantile of a series with no present values is undefined")]
    EmptySeries,
    #[error("quantile level {0} outside [0, 100]")]
    BadQuantileLevel(String),
}

/// Profile one series. All-missing input yields undefined statistics and
/// `missing_count == T`.
pub fn profile_metric(series: &MetricSeries) -> MetricProfile {
    let sorted = series.sorted_present();
    let t_present = sorted.len();
    let missing_count = series.len() - t_present;

    if t_present == 0 {
        return MetricProfile {
            mean: None,
            median: None,
            min: None,
            max: None,
            range: None,
            missing_count,
            percentile_ranks: Vec::new(),
        };
    }

    let mean = sorted.iter().sum::<f64>() / t_present as f64;
    let median = if t_present % 2 == 1 {
        sorted[t_present / 2]
    } else {
        (sorted[t_present / 2 - 1] + sorted[t_present / 2]) / 2.0
    };
    let min = sorted[0];
    let max = sorted[t_present - 1];
    let percentile_ranks = (1..=t_present)
        .map(|i| (i, 100.0 * (i as f64 - 0.5) / t_present as f64))
        .collect();

    MetricProfile {
        mean: Some(mean),
        median: Some(median),
        min: Some(min),
        max: Some(max),
        range: Some(max - min),
        missing_count,
        percentile_ranks,
    }
}

/// Nearest-rank quantile: the order statistic at index `ceil(q * T' / 100)`,
/// clamped to `[1, T']`.
pub fn quantile(series: &MetricSeries, q: f64) -> Result<f64, ProfileError> {
    if !(0.0..=100.0).contains(&q) {
        return Err(ProfileError::BadQuantileLevel(q.to_string()));
    }
    let sorted = series.sorted_present();
    if sorted.is_empty() {
        return Err(ProfileError::EmptySeries);
    }
    let rank = (q * sorted.len() as f64 / 100.0).ceil() as usize;
    let rank = rank.clamp(1, sorted.len());
    Ok(sorted[rank - 1])
}

/// Profile every column of a frame.
pub fn profile_frame(frame: &TidyFrame) -> ProfileReport {
    let profiles = frame
        .columns()
        .iter()
        .enumerate()
        .map(|(i, name)| {
            (
                name.clone(),
                profile_metric(&MetricSeries::from_frame(frame, i)),
            )
        })
        .collect();
    ProfileReport {
        rows: frame.n_rows(),
        cols: frame.n_cols(),
        generated_at_ms: None,
        profiles,
    }
}
