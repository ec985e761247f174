//! The tidy matrix: rows are epoch-millisecond timestamps, columns are
//! namespaced performance metrics, cells are optionally-missing decimals.
//!
//! Pivots reshape each parsed source into a [`TidyFrame`]; [`merge`]
//! interlaces several frames into one unified matrix by taking the sorted
//! union of their timestamps. Missing cells are a distinct absent state,
//! never NaN, so missing counts stay exact.

mod io;
mod pivot;

pub use io::{
    read_frame, read_frame_from_str, write_frame, write_frame_to_string, FrameReadError,
    FrameWriteError,
};
pub use pivot::{pivot_client, pivot_gc, pivot_sar, PivotError, PivotWarning, GC_FIELDS};

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timebase::EpochMillis;

/// One observation row: a timestamp and one optional cell per frame column.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRow {
    pub ts: EpochMillis,
    pub cells: Vec<Option<f64>>,
}

/// Tidy time-series matrix. Row timestamps are strictly increasing and
/// column names unique; every row holds exactly one cell slot per column.
#[derive(Debug, Clone, PartialEq)]
pub struct TidyFrame {
    source_tag: String,
    columns: Vec<String>,
    rows: Vec<FrameRow>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("duplicate column name {0:?}")]
    DuplicateColumn(String),
    #[error("no column named {0:?}")]
    UnknownColumn(String),
    #[error("row {index} timestamp is not strictly greater than its predecessor")]
    NonIncreasingTimestamps { index: usize },
    #[error("row {index} has {got} cells, expected {expected}")]
    CellCountMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
}

impl TidyFrame {
    pub fn new(
        source_tag: impl Into<String>,
        columns: Vec<String>,
        rows: Vec<FrameRow>,
    ) -> Result<Self, FrameError> {
        let mut seen = HashSet::new();
        for name in &columns {
            if !seen.insert(name.as_str()) {
                return Err(FrameError::DuplicateColumn(name.clone()));
            }
        }
        for (index, row) in rows.iter().enumerate() {
            if row.cells.len() != columns.len() {
                return Err(FrameError::CellCountMismatch {
                    index,
                    got: row.cells.len(),
                    expected: columns.len(),
                });
            }
            if index > 0 && rows[index - 1].ts >= row.ts {
                return Err(FrameError::NonIncreasingTimestamps { index });
            }
        }
        Ok(Self {
            source_tag: source_tag.into(),
            columns,
            rows,
        })
    }

    pub fn empty(source_tag: impl Into<String>) -> Self {
        Self {
            source_tag: source_tag.into(),
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[FrameRow] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn timestamps(&self) -> impl Iterator<Item = EpochMillis> + '_ {
        self.rows.iter().map(|r| r.ts)
    }

    pub fn cell(&self, row: usize, col: usize) -> Option<f64> {
        self.rows[row].cells[col]
    }

    /// All cells of one column in row order.
    pub fn column_values(&self, col: usize) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.cells[col]).collect()
    }

    /// A new frame containing only the named columns, in the given order.
    /// Unknown names are an error; row timestamps are preserved.
    pub fn project(&self, columns: &[String]) -> Result<TidyFrame, FrameError> {
        let indexes: Vec<usize> = columns
            .iter()
            .map(|name| {
                self.column_index(name)
                    .ok_or_else(|| FrameError::UnknownColumn(name.clone()))
            })
            .collect::<Result<_, _>>()?;
        let rows = self
            .rows
            .iter()
            .map(|row| FrameRow {
                ts: row.ts,
                cells: indexes.iter().map(|i| row.cells[*i]).collect(),
            })
            .collect();
        TidyFrame::new(self.source_tag.clone(), columns.to_vec(), rows)
    }

    pub fn present_cells(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.cells.iter().filter(|c| c.is_some()).count())
            .sum()
    }

    pub fn missing_cells(&self) -> usize {
        self.n_rows() * self.n_cols() - self.present_cells()
    }
}

/// Dimensions of one merge input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameDims {
    pub rows: usize,
    pub cols: usize,
}

/// Bookkeeping for one merge: input dimensions, output dimensions, and the
/// number of cells created empty by interlacing (cells whose (timestamp,
/// column) slot existed in no input frame). Missing cells that already
/// existed inside an input frame are counted separately.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeStats {
    pub inputs: Vec<FrameDims>,
    pub rows: usize,
    pub cols: usize,
    pub artificial_missing: usize,
    pub source_missing: usize,
}

impl MergeStats {
    /// Upper bound on merged rows: the sum of input row counts.
    pub fn row_bound(&self) -> usize {
        self.inputs.iter().map(|d| d.rows).sum()
    }

    /// Merged column count always equals the sum of input column counts.
    pub fn col_sum(&self) -> usize {
        self.inputs.iter().map(|d| d.cols).sum()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MergeError {
    #[error("column {0:?} appears in more than one input frame")]
    ColumnCollision(String),
}

/// Interlace-merge frames: the merged row index is the sorted union of all
/// input timestamps, merged columns are the inputs' columns concatenated in
/// input order, and a cell is present exactly when its source frame had that
/// (timestamp, column) cell.
pub fn merge(frames: &[TidyFrame]) -> Result<(TidyFrame, MergeStats), MergeError> {
    let mut columns = Vec::new();
    let mut seen = HashSet::new();
    for frame in frames {
        for name in frame.columns() {
            if !seen.insert(name.as_str()) {
                return Err(MergeError::ColumnCollision(name.clone()));
            }
            columns.push(name.clone());
        }
    }

    let total_cols = columns.len();
    let mut merged: BTreeMap<EpochMillis, Vec<Option<f64>>> = BTreeMap::new();
    for row in frames.iter().flat_map(|f| f.rows()) {
        merged
            .entry(row.ts)
            .or_insert_with(|| vec![None; total_cols]);
    }

    let mut col_offset = 0;
    for frame in frames {
        for row in frame.rows() {
            let cells = merged.get_mut(&row.ts).expect("row inserted above");
            cells[col_offset..col_offset + frame.n_cols()].copy_from_slice(&row.cells);
        }
        col_offset += frame.n_cols();
    }

    let rows: Vec<FrameRow> = merged
        .into_iter()
        .map(|(ts, cells)| FrameRow { ts, cells })
        .collect();

    let inputs: Vec<FrameDims> = frames
        .iter()
        .map(|f| FrameDims {
            rows: f.n_rows(),
            cols: f.n_cols(),
        })
        .collect();
    let source_slots: usize = inputs.iter().map(|d| d.rows * d.cols).sum();
    let source_missing: usize = frames.iter().map(|f| f.missing_cells()).sum();
    let stats = MergeStats {
        rows: rows.len(),
        cols: total_cols,
        artificial_missing: rows.len() * total_cols - source_slots,
        source_missing,
        inputs,
    };

    let frame = TidyFrame {
        source_tag: "merged".to_string(),
        columns,
        rows,
    };
    debug_assert_eq!(
        frame.missing_cells(),
        stats.artificial_missing + stats.source_missing
    );
    Ok((frame, stats))
}
