//! Canonical tidy file format: comma-separated UTF-8.
//!
//! ```text
//! # encoding: kind 0=Minor 1=Full
//! ts_epoch_ms,gc.jvm1.pause_s,sar.web01.%user
//! 1437473703000,0.0456789,12.5
//! 1437473710000,,24.0
//! ```
//!
//! The leading comment appears only when the frame carries a GC kind column.
//! Missing cells serialize as the empty string; decimals use shortest
//! round-trip formatting so `read(write(f))` reproduces `f` cell-for-cell.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::timebase::EpochMillis;

use super::{FrameRow, TidyFrame};

pub const TS_COLUMN: &str = "ts_epoch_ms";
pub const KIND_ENCODING_COMMENT: &str = "# encoding: kind 0=Minor 1=Full";

#[derive(Debug, Error)]
pub enum FrameWriteError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("column name {0:?} contains a separator or line break")]
    UnwritableColumnName(String),
    #[error("non-finite cell in column {column:?} at {ts}")]
    NonFiniteCell { column: String, ts: EpochMillis },
}

#[derive(Debug, Error, PartialEq)]
pub enum FrameReadError {
    #[error("line {line_no}: {message}")]
    Format { line_no: usize, message: String },
    #[error("missing header line")]
    MissingHeader,
}

fn format_err(line_no: usize, message: impl Into<String>) -> FrameReadError {
    FrameReadError::Format {
        line_no,
        message: message.into(),
    }
}

pub fn write_frame(frame: &TidyFrame, sink: &mut impl Write) -> Result<(), FrameWriteError> {
    for name in frame.columns() {
        if name.contains(',') || name.contains('\n') || name.contains('\r') {
            return Err(FrameWriteError::UnwritableColumnName(name.clone()));
        }
    }
    if frame.columns().iter().any(|c| c.ends_with(".kind")) {
        writeln!(sink, "{KIND_ENCODING_COMMENT}")?;
    }
    write!(sink, "{TS_COLUMN}")?;
    for name in frame.columns() {
        write!(sink, ",{name}")?;
    }
    writeln!(sink)?;
    for row in frame.rows() {
        write!(sink, "{}", row.ts)?;
        for (cell, name) in row.cells.iter().zip(frame.columns()) {
            match cell {
                Some(v) if v.is_finite() => write!(sink, ",{v}")?,
                Some(_) => {
                    return Err(FrameWriteError::NonFiniteCell {
                        column: name.clone(),
                        ts: row.ts,
                    })
                }
                None => write!(sink, ",")?,
            }
        }
        writeln!(sink)?;
    }
    Ok(())
}

pub fn write_frame_to_string(frame: &TidyFrame) -> Result<String, FrameWriteError> {
    let mut buf = Vec::new();
    write_frame(frame, &mut buf)?;
    Ok(String::from_utf8(buf).expect("frame text is UTF-8"))
}

pub fn read_frame(
    source: &mut impl BufRead,
    source_tag: &str,
) -> Result<TidyFrame, FrameReadError> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| format_err(0, format!("read failed: {e}")))?;
    read_frame_from_str(&text, source_tag)
}

pub fn read_frame_from_str(text: &str, source_tag: &str) -> Result<TidyFrame, FrameReadError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.strip_suffix('\r').unwrap_or(line)))
        .filter(|(_, line)| !line.trim().is_empty() && !line.trim_start().starts_with('#'));

    let (header_no, header) = lines.next().ok_or(FrameReadError::MissingHeader)?;
    let mut fields = header.split(',');
    if fields.next() != Some(TS_COLUMN) {
        return Err(format_err(
            header_no,
            format!("header must start with {TS_COLUMN:?}"),
        ));
    }
    let columns: Vec<String> = fields.map(|f| f.to_string()).collect();
    for (i, name) in columns.iter().enumerate() {
        if name.is_empty() {
            return Err(format_err(header_no, "empty column name in header"));
        }
        if columns[..i].contains(name) {
            return Err(format_err(
                header_no,
                format!("duplicate column {name:?} in header"),
            ));
        }
    }

    let mut rows: Vec<FrameRow> = Vec::new();
    for (line_no, line) in lines {
        let mut fields = line.split(',');
        let ts_text = fields.next().expect("split yields at least one field");
        let ts: i64 = ts_text
            .parse()
            .map_err(|_| format_err(line_no, format!("bad timestamp {ts_text:?}")))?;
        let ts = EpochMillis(ts);
        if let Some(last) = rows.last() {
            if last.ts >= ts {
                return Err(format_err(
                    line_no,
                    format!("timestamp {ts} is not strictly increasing"),
                ));
            }
        }
        let mut cells = Vec::with_capacity(columns.len());
        for field in fields {
            if field.is_empty() {
                cells.push(None);
            } else {
                let value: f64 = field
                    .parse()
                    .map_err(|_| format_err(line_no, format!("bad cell value {field:?}")))?;
                if !value.is_finite() {
                    return Err(format_err(line_no, format!("non-finite cell {field:?}")));
                }
                cells.push(Some(value));
            }
        }
        if cells.len() != columns.len() {
            return Err(format_err(
                line_no,
                format!("expected {} cells, found {}", columns.len(), cells.len()),
            ));
        }
        rows.push(FrameRow { ts, cells });
    }

    TidyFrame::new(source_tag, columns, rows)
        .map_err(|e| format_err(0, format!("invalid frame: {e}")))
}

#[cfg(test)]
mod tests {
    use super::super::tests::frame_of;
    use super::*;

    #[test]
    fn round_trip_preserves_cells_and_order() {
        let frame = frame_of(
            "merged",
            &["gc.j1.pause_s", "sar.h.%user", "client.rt"],
            &[
                (1000, &[Some(0.1), Some(10.0), None]),
                (1500, &[None, None, Some(245.3)]),
                (2000, &[None, Some(20.0), None]),
                (3000, &[Some(0.2), None, None]),
            ],
        );
        let text = write_frame_to_string(&frame).unwrap();
        let back = read_frame_from_str(&text, "merged").unwrap();
        assert_eq!(back.columns(), frame.columns());
        assert_eq!(back.rows(), frame.rows());
    }

    #[test]
    fn missing_cell_is_empty_field() {
        let frame = frame_of("t", &["a", "b"], &[(5, &[None, Some(1.5)])]);
        let text = write_frame_to_string(&frame).unwrap();
        assert_eq!(text, "ts_epoch_ms,a,b\n5,,1.5\n");
    }

    #[test]
    fn kind_column_gets_encoding_comment() {
        let frame = frame_of("t", &["gc.j1.kind"], &[(5, &[Some(1.0)])]);
        let text = write_frame_to_string(&frame).unwrap();
        assert!(text.starts_with(KIND_ENCODING_COMMENT));
        let back = read_frame_from_str(&text, "t").unwrap();
        assert_eq!(back.cell(0, 0), Some(1.0));
    }

    #[test]
    fn duplicate_header_column_is_an_error() {
        let err = read_frame_from_str("ts_epoch_ms,a,a\n", "t").unwrap_err();
        assert!(matches!(err, FrameReadError::Format { line_no: 1, .. }));
    }

    #[test]
    fn read_errors_carry_line_numbers() {
        let err = read_frame_from_str("ts_epoch_ms,a\n100,1.0\nxx,2.0\n", "t").unwrap_err();
        assert_eq!(
            err,
            FrameReadError::Format {
                line_no: 3,
                message: "bad timestamp \"xx\"".to_string()
            }
        );

        let err = read_frame_from_str("ts_epoch_ms,a\n100,1.0\n100,2.0\n", "t").unwrap_err();
        assert!(matches!(err, FrameReadError::Format { line_no: 3, .. }));

        let err = read_frame_from_str("ts_epoch_ms,a\n100,1.0,2.0\n", "t").unwrap_err();
        assert!(matches!(err, FrameReadError::Format { line_no: 2, .. }));
    }

    #[test]
    fn rejects_non_finite_cells_on_write() {
        let frame = frame_of("t", &["a"], &[(5, &[Some(f64::NAN)])]);
        assert!(matches!(
            write_frame(&frame, &mut Vec::new()),
            Err(FrameWriteError::NonFiniteCell { .. })
        ));
    }

    #[test]
    fn shortest_round_trip_decimals_survive() {
        let values = [0.1, 1.0 / 3.0, 105.0, 12.5, f64::MIN_POSITIVE, 1e300];
        let cells: Vec<Option<f64>> = values.iter().copied().map(Some).collect();
        let frame = frame_of("t", &["c0", "c1", "c2", "c3", "c4", "c5"], &[(0, &cells)]);
        let text = write_frame_to_string(&frame).unwrap();
        let back = read_frame_from_str(&text, "t").unwrap();
        for (i, v) in values.iter().enumerate() {
            assert_eq!(back.cell(0, i), Some(*v));
        }
    }
}
