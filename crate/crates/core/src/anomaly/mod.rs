//! Posterior statistical screens: flag the "impossibles" that survive the
//! earlier quality layers.
//!
//! Four methods: z-score and IQR outlier detection, seeded k-means
//! clustering, and histogram density screening. All flags are advisory and
//! reported under the `A-*` namespace alongside rule findings. Missing cells
//! are excluded per series; no imputation ever happens. Every method is
//! deterministic for fixed parameters and seed.

mod kmeans;

pub use kmeans::{cluster_rows, ClusterOutcome};

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::profile::{quantile, MetricSeries};
use crate::tidy::TidyFrame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AnomalyMethod {
    ZScore,
    Iqr,
    Cluster,
    Density,
}

/// One flagged (column, timestamp) cell or row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalyFlag {
    pub column: String,
    pub ts_epoch_ms: i64,
    pub method: AnomalyMethod,
    /// Method-specific: |z| for ZScore, distance beyond the fence for Iqr,
    /// cluster size for Cluster, bin relative frequency for Density.
    pub score: f64,
    pub detail: String,
}

/// One method's run over a frame: parameters exactly as used, columns
/// screened, flags raised, and any skip notices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnomalyReport {
    pub method: AnomalyMethod,
    pub params: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    pub columns: Vec<String>,
    pub flags: Vec<AnomalyFlag>,
    pub notices: Vec<String>,
}

#[derive(Debug, Error, PartialEq)]
pub enum AnomalyError {
    #[error("min_fraction {0} outside the open interval (0, 1)")]
    BadMinFraction(f64),
}

fn population_sd(values: &[f64], mean: f64) -> f64 {
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

/// Flag present values with |x - mean| / sd > k, using the population
/// standard deviation. Fewer than two present values, or sd = 0, flags
/// nothing.
pub fn zscore_outliers(series: &MetricSeries, k: f64) -> Vec<AnomalyFlag> {
    debug_assert!(k > 0.0);
    let present = series.present();
    if present.len() < 2 {
        return Vec::new();
    }
    let mean = present.iter().sum::<f64>() / present.len() as f64;
    let sd = population_sd(&present, mean);
    if sd == 0.0 {
        return Vec::new();
    }
    series
        .timestamps
        .iter()
        .zip(&series.values)
        .filter_map(|(ts, value)| {
            let value = (*value)?;
            let z = (value - mean).abs() / sd;
            (z > k).then(|| AnomalyFlag {
                column: series.name.clone(),
                ts_epoch_ms: ts.0,
                method: AnomalyMethod::ZScore,
                score: z,
                detail: format!("value {value} has |z| = {z:.3} > {k}"),
            })
        })
        .collect()
}

/// Flag present values outside [Q1 - m*IQR, Q3 + m*IQR] with the standard
/// multiplier m = 1.5. Quartiles use the nearest-rank quantile.
pub fn iqr_outliers(series: &MetricSeries) -> Vec<AnomalyFlag> {
    iqr_outliers_with(series, 1.5)
}

pub fn iqr_outliers_with(series: &MetricSeries, multiplier: f64) -> Vec<AnomalyFlag> {
    if series.present().len() < 4 {
        return Vec::new();
    }
    let q1 = quantile(series, 25.0).expect("present count checked above");
    let q3 = quantile(series, 75.0).expect("present count checked above");
    let iqr = q3 - q1;
    let lower = q1 - multiplier * iqr;
    let upper = q3 + multiplier * iqr;
    series
        .timestamps
        .iter()
        .zip(&series.values)
        .filter_map(|(ts, value)| {
            let value = (*value)?;
            if value < lower || value > upper {
                let distance = if value < lower {
                    lower - value
                } else {
                    value - upper
                };
                Some(AnomalyFlag {
                    column: series.name.clone(),
                    ts_epoch_ms: ts.0,
                    method: AnomalyMethod::Iqr,
                    score: distance,
                    detail: format!(
                        "value {value} outside fences [{lower}, {upper}] (Q1={q1}, Q3={q3})"
                    ),
                })
            } else {
                None
            }
        })
        .collect()
}

/// Histogram density screen: build bins with Freedman-Diaconis width
/// (Sturges when IQR = 0) and flag values in bins whose relative frequency
/// is below `min_fraction`. Requires at least 8 present values and a
/// positive range; otherwise nothing is flagged.
pub fn density_flags(
    series: &MetricSeries,
    min_fraction: f64,
) -> Result<Vec<AnomalyFlag>, AnomalyError> {
    if !(min_fraction > 0.0 && min_fraction < 1.0) {
        return Err(AnomalyError::BadMinFraction(min_fraction));
    }
    let sorted = series.sorted_present();
    let n = sorted.len();
    if n < 8 {
        return Ok(Vec::new());
    }
    let min = sorted[0];
    let max = sorted[n - 1];
    let range = max - min;
    if range <= 0.0 {
        return Ok(Vec::new());
    }

    let q1 = quantile(series, 25.0).expect("non-empty");
    let q3 = quantile(series, 75.0).expect("non-empty");
    let iqr = q3 - q1;
    let width = if iqr > 0.0 {
        2.0 * iqr / (n as f64).cbrt()
    } else {
        let sturges = (n as f64).log2().ceil() + 1.0;
        range / sturges
    };
    // A near-degenerate IQR against a wide range would ask for an absurd
    // number of bins; cap the histogram and widen the bins instead.
    const MAX_BINS: usize = 1 << 20;
    let bin_count = ((range / width).ceil() as usize).clamp(1, MAX_BINS);
    let width = if bin_count == MAX_BINS {
        range / MAX_BINS as f64
    } else {
        width
    };
    let bin_of =
        |value: f64| -> usize { (((value - min) / width).floor() as usize).min(bin_count - 1) };

    let mut counts = vec![0usize; bin_count];
    for value in &sorted {
        counts[bin_of(*value)] += 1;
    }

    let flags = series
        .timestamps
        .iter()
        .zip(&series.values)
        .filter_map(|(ts, value)| {
            let value = (*value)?;
            let bin = bin_of(value);
            let fraction = counts[bin] as f64 / n as f64;
            (fraction < min_fraction).then(|| AnomalyFlag {
                column: series.name.clone(),
                ts_epoch_ms: ts.0,
                method: AnomalyMethod::Density,
                score: fraction,
                detail: format!(
                    "value {value} falls in bin {bin}/{bin_count} with frequency {fraction} < {min_fraction}"
                ),
            })
        })
        .collect();
    Ok(flags)
}

/// Parameters for a full screening pass over a frame.
#[derive(Debug, Clone)]
pub struct ScreenParams {
    pub zscore_k: f64,
    pub iqr_multiplier: f64,
    pub density_min_fraction: f64,
    pub kmeans_k: usize,
    pub seed: u64,
    /// Skip columns carrying the documented categorical encoding
    /// (`*.kind`): continuous outlier screens are meaningless there.
    pub skip_categorical: bool,
}

impl Default for ScreenParams {
    fn default() -> Self {
        Self {
            zscore_k: 4.0,
            iqr_multiplier: 1.5,
            density_min_fraction: 0.005,
            kmeans_k: 4,
            seed: 42,
            skip_categorical: true,
        }
    }
}

/// Run every screen over a frame and collect one report per method.
pub fn screen_frame(frame: &TidyFrame, params: &ScreenParams) -> Vec<AnomalyReport> {
    let columns: Vec<String> = frame
        .columns()
        .iter()
        .filter(|c| !(params.skip_categorical && c.ends_with(".kind")))
        .cloned()
        .collect();
    let series: Vec<MetricSeries> = columns
        .iter()
        .map(|name| {
            MetricSeries::from_frame(frame, frame.column_index(name).expect("column exists"))
        })
        .collect();

    let mut reports = Vec::new();

    let mut flags = Vec::new();
    for s in &series {
        flags.extend(zscore_outliers(s, params.zscore_k));
    }
    reports.push(AnomalyReport {
        method: AnomalyMethod::ZScore,
        params: BTreeMap::from([("k".to_string(), params.zscore_k)]),
        seed: None,
        columns: columns.clone(),
        flags,
        notices: Vec::new(),
    });

    let mut flags = Vec::new();
    for s in &series {
        flags.extend(iqr_outliers_with(s, params.iqr_multiplier));
    }
    reports.push(AnomalyReport {
        method: AnomalyMethod::Iqr,
        params: BTreeMap::from([("multiplier".to_string(), params.iqr_multiplier)]),
        seed: None,
        columns: columns.clone(),
        flags,
        notices: Vec::new(),
    });

    let mut flags = Vec::new();
    for s in &series {
        flags.extend(
            density_flags(s, params.density_min_fraction)
                .expect("default min_fraction is in (0, 1)"),
        );
    }
    reports.push(AnomalyReport {
        method: AnomalyMethod::Density,
        params: BTreeMap::from([("min_fraction".to_string(), params.density_min_fraction)]),
        seed: None,
        columns: columns.clone(),
        flags,
        notices: Vec::new(),
    });

    let projected = frame
        .project(&columns)
        .expect("screened columns come from the frame");
    let outcome = cluster_rows(&projected, params.kmeans_k, params.seed);
    reports.push(AnomalyReport {
        method: AnomalyMethod::Cluster,
        params: BTreeMap::from([("k".to_string(), params.kmeans_k as f64)]),
        seed: Some(params.seed),
        columns,
        flags: outcome.flags,
        notices: outcome.skipped.into_iter().collect(),
    });

    reports
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timebase::EpochMillis;

    pub(crate) fn series_of(values: &[f64]) -> MetricSeries {
        MetricSeries {
            name: "m".to_string(),
            timestamps: (0..values.len() as i64).map(EpochMillis).collect(),
            values: values.iter().copied().map(Some).collect(),
        }
    }

    #[test]
    fn zscore_flags_only_the_spike() {
        let mut values = vec![10.0; 99];
        values.push(1000.0);
        let flags = zscore_outliers(&series_of(&values), 4.0);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].ts_epoch_ms, 99);
        // mean 19.9, sd ~98.5, z ~9.95
        assert!((flags[0].score - 9.9498).abs() < 1e-3);
    }

    #[test]
    fn zscore_degenerate_cases() {
        assert!(zscore_outliers(&series_of(&[5.0, 5.0, 5.0]), 4.0).is_empty());
        assert!(zscore_outliers(&series_of(&[5.0]), 4.0).is_empty());
        assert!(zscore_outliers(&series_of(&[0.0, 0.0, 0.0, 1.0]), 100.0).is_empty());
    }

    #[test]
    fn iqr_flags_value_beyond_fences() {
        let mut values: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        values.push(1000.0);
        let flags = iqr_outliers(&series_of(&values));
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].ts_epoch_ms, 100);
        // Q1=26, Q3=76, upper fence 151, so distance is 849.
        assert_eq!(flags[0].score, 849.0);

        let clean: Vec<f64> = (1..=100).map(|v| v as f64).collect();
        assert!(iqr_outliers(&series_of(&clean)).is_empty());
    }

    #[test]
    fn iqr_degenerate_cases() {
        assert!(iqr_outliers(&series_of(&[7.0, 7.0, 7.0, 7.0])).is_empty());
        assert!(iqr_outliers(&series_of(&[1.0, 2.0, 3.0])).is_empty());
    }

    #[test]
    fn density_flags_the_isolated_value() {
        let mut values: Vec<f64> = (0..999).map(|i| i as f64 / 998.0).collect();
        values.push(50.0);
        let flags = density_flags(&series_of(&values), 0.005).unwrap();
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].ts_epoch_ms, 999);
        assert!(flags[0].score < 0.005);
    }

    #[test]
    fn density_degenerate_cases() {
        assert!(density_flags(&series_of(&[3.0; 20]), 0.005)
            .unwrap()
            .is_empty());
        assert!(density_flags(&series_of(&[1.0, 2.0]), 0.005)
            .unwrap()
            .is_empty());
        assert_eq!(
            density_flags(&series_of(&[1.0, 2.0]), 0.0),
            Err(AnomalyError::BadMinFraction(0.0))
        );
        assert!(density_flags(&series_of(&[1.0, 2.0]), 1.0).is_err());
    }

    #[test]
    fn density_uniform_data_is_clean() {
        let values: Vec<f64> = (0..200).map(|i| i as f64).collect();
        assert!(density_flags(&series_of(&values), 0.005)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn density_survives_degenerate_iqr_with_huge_range() {
        // Most mass at ~0 with a tiny spread, one value far away: the raw
        // Freedman-Diaconis width would demand billions of bins.
        let mut values = vec![0.0; 999];
        for (i, v) in values.iter_mut().enumerate() {
            *v = i as f64 * 1e-9;
        }
        values.push(1e12);
        let flags = density_flags(&series_of(&values), 0.005).unwrap();
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].ts_epoch_ms, 999);
    }

    #[test]
    fn translation_invariance_of_flagged_indices() {
        let mut values = vec![10.0; 50];
        values.push(500.0);
        let base = series_of(&values);
        let shifted = series_of(&values.iter().map(|v| v + 1234.0).collect::<Vec<_>>());
        let idx = |flags: Vec<AnomalyFlag>| -> Vec<i64> {
            flags.into_iter().map(|f| f.ts_epoch_ms).collect()
        };
        assert_eq!(
            idx(zscore_outliers(&base, 4.0)),
            idx(zscore_outliers(&shifted, 4.0))
        );
        assert_eq!(idx(iqr_outliers(&base)), idx(iqr_outliers(&shifted)));
        assert_eq!(
            idx(density_flags(&base, 0.01).unwrap()),
            idx(density_flags(&shifted, 0.01).unwrap())
        );
    }

    #[test]
    fn positive_scale_invariance_of_flagged_indices() {
        let mut values: Vec<f64> = (1..=60).map(|v| v as f64).collect();
        values.push(900.0);
        let base = series_of(&values);
        let scaled = series_of(&values.iter().map(|v| v * 3.5).collect::<Vec<_>>());
        let idx = |flags: Vec<AnomalyFlag>| -> Vec<i64> {
            flags.into_iter().map(|f| f.ts_epoch_ms).collect()
        };
        assert_eq!(
            idx(zscore_outliers(&base, 4.0)),
            idx(zscore_outliers(&scaled, 4.0))
        );
        assert_eq!(idx(iqr_outliers(&base)), idx(iqr_outliers(&scaled)));
    }

    #[test]
    fn missing_cells_are_excluded_per_series() {
        let series = MetricSeries {
            name: "m".to_string(),
            timestamps: (0..6).map(EpochMillis).collect(),
            values: vec![Some(1.0), None, Some(1.0), Some(1.0), None, Some(100.0)],
        };
        let flags = zscore_outliers(&series, 1.0);
        assert_eq!(flags.len(), 1);
        assert_eq!(flags[0].ts_epoch_ms, 5);
    }
}
