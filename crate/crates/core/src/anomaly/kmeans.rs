//! Seeded Lloyd k-means over complete frame rows, flagging rows that land
//! in near-empty clusters.
//!
//! Columns are standardized to zero mean and unit (population) standard
//! deviation; constant columns contribute zero. Rows with any missing
//! screened cell are excluded; no imputation. Initial centroids are k
//! distinct rows: the first by seeded draw, the rest by farthest-point
//! traversal so an isolated row always earns its own centroid regardless of
//! the seed. Iteration stops after 100 rounds or when no centroid moves more
//! than 1e-9.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tidy::TidyFrame;

use super::{AnomalyFlag, AnomalyMethod};

const MAX_ITERATIONS: usize = 100;
const MOVEMENT_EPS: f64 = 1e-9;

/// Result of one clustering screen: flags, or a notice when the frame had
/// too few complete rows to cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOutcome {
    pub flags: Vec<AnomalyFlag>,
    pub skipped: Option<String>,
}

impl ClusterOutcome {
    fn skipped(reason: impl Into<String>) -> Self {
        Self {
            flags: Vec::new(),
            skipped: Some(reason.into()),
        }
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Cluster the frame's complete rows into k groups and flag every row in a
/// cluster of size <= max(1, 1% of rows).
pub fn cluster_rows(frame: &TidyFrame, k: usize, seed: u64) -> ClusterOutcome {
    if k < 2 {
        return ClusterOutcome::skipped(format!("cluster count k={k} must be at least 2"));
    }
    if frame.n_cols() == 0 {
        return ClusterOutcome::skipped("frame has no columns to screen");
    }
    let complete: Vec<usize> = (0..frame.n_rows())
        .filter(|&r| frame.rows()[r].cells.iter().all(|c| c.is_some()))
        .collect();
    if complete.len() < k {
        return ClusterOutcome::skipped(format!(
            "only {} complete rows for k={k}; clustering skipped",
            complete.len()
        ));
    }

    // Standardize per column over the complete rows.
    let n = complete.len();
    let dims = frame.n_cols();
    let mut points = vec![vec![0.0f64; dims]; n];
    for d in 0..dims {
        let raw: Vec<f64> = complete
            .iter()
            .map(|&r| frame.cell(r, d).expect("complete row"))
            .collect();
        let mean = raw.iter().sum::<f64>() / n as f64;
        let sd = (raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        for (p, v) in points.iter_mut().zip(&raw) {
            p[d] = if sd > 0.0 { (v - mean) / sd } else { 0.0 };
        }
    }

    // First centroid by seeded draw, the rest by farthest-point traversal.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroid_rows = vec![rng.gen_range(0..n)];
    while centroid_rows.len() < k {
        let next = (0..n)
            .filter(|i| !centroid_rows.contains(i))
            .max_by(|&a, &b| {
                let da = centroid_rows
                    .iter()
                    .map(|&c| squared_distance(&points[a], &points[c]))
                    .fold(f64::INFINITY, f64::min);
                let db = centroid_rows
                    .iter()
                    .map(|&c| squared_distance(&points[b], &points[c]))
                    .fold(f64::INFINITY, f64::min);
                da.total_cmp(&db)
            })
            .expect("n >= k > centroids chosen so far");
        centroid_rows.push(next);
    }
    let mut centroids: Vec<Vec<f64>> = centroid_rows.iter().map(|&r| points[r].clone()).collect();

    let mut assignment = vec![0usize; n];
    let mut prev_wcss = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        // Assign each point to its nearest centroid; ties go to the lowest
        // centroid index so duplicate points stay together.
        let mut wcss = 0.0;
        for (i, point) in points.iter().enumerate() {
            let (best, dist) = centroids
                .iter()
                .enumerate()
                .map(|(c, centroid)| (c, squared_distance(point, centroid)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .expect("k >= 2 centroids");
            assignment[i] = best;
            wcss += dist;
        }
        debug_assert!(
            wcss <= prev_wcss + MOVEMENT_EPS,
            "k-means objective increased: {prev_wcss} -> {wcss}"
        );
        prev_wcss = wcss;

        // Recompute centroids; empty clusters keep their position.
        let mut movement: f64 = 0.0;
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&assignment)
                .filter(|(_, a)| **a == c)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                continue;
            }
            let mut updated = vec![0.0; dims];
            for member in &members {
                for (u, v) in updated.iter_mut().zip(member.iter()) {
                    *u += v;
                }
            }
            for u in &mut updated {
                *u /= members.len() as f64;
            }
            movement = movement.max(squared_distance(centroid, &updated).sqrt());
            *centroid = updated;
        }
        if movement < MOVEMENT_EPS {
            break;
        }
    }

    let mut sizes = vec![0usize; k];
    for &a in &assignment {
        sizes[a] += 1;
    }
    let threshold = (n / 100).max(1);

    let flags = complete
        .iter()
        .zip(&assignment)
        .filter(|(_, &cluster)| sizes[cluster] > 0 && sizes[cluster] <= threshold)
        .map(|(&row, &cluster)| AnomalyFlag {
            column: frame.columns()[0].clone(),
            ts_epoch_ms: frame.rows()[row].ts.0,
            method: AnomalyMethod::Cluster,
            score: sizes[cluster] as f64,
            detail: format!(
                "row joins cluster of size {} (threshold {threshold}, {} complete rows, k={k})",
                sizes[cluster], n
            ),
        })
        .collect();

    ClusterOutcome {
        flags,
        skipped: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tidy::FrameRow;
    use crate::timebase::EpochMillis;

    fn frame_from_points(points: &[(f64, f64)]) -> TidyFrame {
        TidyFrame::new(
            "t",
            vec!["x".to_string(), "y".to_string()],
            points
                .iter()
                .enumerate()
                .map(|(i, (x, y))| FrameRow {
                    ts: EpochMillis(i as i64 * 1000),
                    cells: vec![Some(*x), Some(*y)],
                })
                .collect(),
        )
        .unwrap()
    }

    fn two_blobs_and_a_stray() -> TidyFrame {
        let mut points = Vec::new();
        for i in 0..50 {
            points.push((0.0 + (i % 5) as f64 * 0.01, 0.0 + (i / 5) as f64 * 0.01));
        }
        for i in 0..50 {
            points.push((10.0 + (i % 5) as f64 * 0.01, 10.0 + (i / 5) as f64 * 0.01));
        }
        points.push((100.0, 100.0));
        frame_from_points(&points)
    }

    #[test]
    fn isolated_point_lands_in_a_singleton_cluster() {
        let frame = two_blobs_and_a_stray();
        for seed in [0, 1, 7, 42, 1234] {
            let outcome = cluster_rows(&frame, 3, seed);
            assert!(outcome.skipped.is_none());
            assert_eq!(outcome.flags.len(), 1, "seed {seed}");
            assert_eq!(outcome.flags[0].ts_epoch_ms, 100_000);
            assert_eq!(outcome.flags[0].score, 1.0);
        }
    }

    #[test]
    fn duplicate_points_are_not_flagged() {
        let frame = frame_from_points(&[(3.0, 3.0), (3.0, 3.0)]);
        let outcome = cluster_rows(&frame, 2, 9);
        assert!(outcome.skipped.is_none());
        assert!(outcome.flags.is_empty());
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let frame = two_blobs_and_a_stray();
        let a = cluster_rows(&frame, 3, 42);
        let b = cluster_rows(&frame, 3, 42);
        assert_eq!(a, b);
    }

    #[test]
    fn insufficient_complete_rows_is_a_notice() {
        let frame = TidyFrame::new(
            "t",
            vec!["x".to_string()],
            vec![
                FrameRow {
                    ts: EpochMillis(0),
                    cells: vec![Some(1.0)],
                },
                FrameRow {
                    ts: EpochMillis(1000),
                    cells: vec![None],
                },
            ],
        )
        .unwrap();
        let outcome = cluster_rows(&frame, 2, 0);
        assert!(outcome.skipped.is_some());
        assert!(outcome.flags.is_empty());
    }

    #[test]
    fn k_below_two_is_skipped() {
        let frame = frame_from_points(&[(0.0, 0.0), (1.0, 1.0)]);
        assert!(cluster_rows(&frame, 1, 0).skipped.is_some());
    }

    #[test]
    fn constant_columns_do_not_poison_standardization() {
        let mut points: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, 5.0)).collect();
        points.push((1000.0, 5.0));
        let frame = frame_from_points(&points);
        let outcome = cluster_rows(&frame, 2, 3);
        assert!(outcome.skipped.is_none());
        assert_eq!(outcome.flags.len(), 1);
        assert_eq!(outcome.flags[0].ts_epoch_ms, 20_000);
    }
}
